//! Fixed-order Gauss-Legendre rules on the unit interval.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

/// Nodes per segment used by every segment–segment energy evaluation.
pub const SEGMENT_NODES: usize = 16;

/// Gauss-Legendre rule mapped to `[0, 1]`; weights sum to one.
#[derive(Debug, Clone)]
pub struct UnitRule {
    pairs: Vec<(f64, f64)>,
}

impl UnitRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
        let rule = GaussLegendre::new(order);
        let mut pairs: Vec<(f64, f64)> = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// ∫₀¹ f(t) dt.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.pairs.iter().map(|&(t, w)| w * f(t)).sum()
    }
}

/// Shared 16-node rule.
pub fn segment_rule() -> &'static UnitRule {
    static RULE: OnceLock<UnitRule> = OnceLock::new();
    RULE.get_or_init(|| UnitRule::new(SEGMENT_NODES))
}
