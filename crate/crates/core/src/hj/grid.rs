use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::HjError;

const MAGIC: &[u8; 4] = b"HJVG";
const VERSION: u32 = 1;

/// One uniformly spaced grid axis. On a periodic axis the last node
/// coincides with the first (`hi - lo` is the period).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            lo,
            hi,
            n,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            lo,
            hi,
            n,
            periodic: true,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    /// Lower cell index, fraction inside the cell, and whether `x` was clamped.
    fn locate(&self, x: f64) -> (usize, f64, bool) {
        let (xc, clamped) = if self.periodic {
            (self.lo + (x - self.lo).rem_euclid(self.hi - self.lo), false)
        } else if x < self.lo {
            (self.lo, true)
        } else if x > self.hi {
            (self.hi, true)
        } else {
            (x, false)
        };
        let f = (xc - self.lo) / self.spacing();
        let i0 = (f.floor().max(0.0) as usize).min(self.n - 2);
        (i0, (f - i0 as f64).clamp(0.0, 1.0), clamped)
    }
}

/// Value function sampled on a tensor grid, row-major with the last axis
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    pub values: Vec<f64>,
    /// Backward time the values correspond to (s).
    pub time: f64,
}

fn strides_of(axes: &[Axis]) -> Vec<usize> {
    let mut strides = vec![1; axes.len()];
    for d in (0..axes.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * axes[d + 1].n;
    }
    strides
}

impl ValueGrid {
    pub fn new(axes: Vec<Axis>, values: Vec<f64>, time: f64) -> Result<Self, HjError> {
        if axes.is_empty() {
            return Err(HjError::Format("grid needs at least one axis".into()));
        }
        if let Some(a) = axes.iter().find(|a| a.n < 3 || !(a.hi > a.lo)) {
            return Err(HjError::Format(format!("invalid axis {a:?}")));
        }
        let len: usize = axes.iter().map(|a| a.n).product();
        if values.len() != len {
            return Err(HjError::Format(format!(
                "{} values for {len} nodes",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HjError::Format("non-finite value".into()));
        }
        Ok(Self {
            strides: strides_of(&axes),
            axes,
            values,
            time,
        })
    }

    /// Samples `f` at every node. The closing node of a periodic axis copies
    /// the opening one instead of being sampled at the far end.
    pub fn from_fn(axes: Vec<Axis>, time: f64, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let strides = strides_of(&axes);
        let len: usize = axes.iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(len);
        let mut x = vec![0.0; axes.len()];
        for flat in 0..len {
            let mut rem = flat;
            let mut canonical = flat;
            for d in (0..axes.len()).rev() {
                let j = rem % axes[d].n;
                if axes[d].periodic && j == axes[d].n - 1 {
                    canonical -= j * strides[d];
                }
                x[d] = axes[d].node(j);
                rem /= axes[d].n;
            }
            let v = if canonical < flat {
                values[canonical]
            } else {
                f(&x)
            };
            values.push(v);
        }
        Self {
            strides,
            axes,
            values,
            time,
        }
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node coordinates of a flat index.
    pub fn node_coords(&self, flat: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        let mut rem = flat;
        for d in (0..self.dim()).rev() {
            x[d] = self.axes[d].node(rem % self.axes[d].n);
            rem /= self.axes[d].n;
        }
        x
    }

    /// Multilinear interpolation; the flag reports clamping on a bounded axis.
    pub fn interpolate(&self, x: &[f64]) -> (f64, bool) {
        assert_eq!(x.len(), self.dim());
        let mut base = 0;
        let mut frac = [0.0; 8];
        let mut clamped = false;
        for d in 0..self.dim() {
            let (i0, t, c) = self.axes[d].locate(x[d]);
            base += i0 * self.strides[d];
            frac[d] = t;
            clamped |= c;
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << self.dim()) {
            let mut w = 1.0;
            let mut idx = base;
            for d in 0..self.dim() {
                if corner >> d & 1 == 1 {
                    w *= frac[d];
                    idx += self.strides[d];
                } else {
                    w *= 1.0 - frac[d];
                }
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        (acc, clamped)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.interpolate(x).0
    }

    /// Central differences of the interpolant with one cell of spacing.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.dim()];
        let mut probe = x.to_vec();
        for d in 0..self.dim() {
            let a = self.axes[d];
            let h = a.spacing();
            let (lo, hi) = if a.periodic {
                (x[d] - h, x[d] + h)
            } else {
                let c = x[d].clamp(a.lo, a.hi);
                ((c - h).max(a.lo), (c + h).min(a.hi))
            };
            probe[d] = hi;
            let vh = self.value(&probe);
            probe[d] = lo;
            let vl = self.value(&probe);
            probe[d] = x[d];
            p[d] = (vh - vl) / (hi - lo);
        }
        p
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<(), HjError> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        for a in &self.axes {
            w.write_all(&a.lo.to_le_bytes())?;
            w.write_all(&a.hi.to_le_bytes())?;
            w.write_all(&(a.n as u32).to_le_bytes())?;
            w.write_all(&[a.periodic as u8])?;
        }
        w.write_all(&self.time.to_le_bytes())?;
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self, HjError> {
        fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], HjError> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)?;
            Ok(b)
        }
        if &take::<4, _>(r)? != MAGIC {
            return Err(HjError::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(r)?);
        if version != VERSION {
            return Err(HjError::Format(format!("unsupported version {version}")));
        }
        let ndim = u32::from_le_bytes(take(r)?) as usize;
        if ndim == 0 || ndim > 8 {
            return Err(HjError::Format(format!("unsupported dimension {ndim}")));
        }
        let mut axes = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            let lo = f64::from_le_bytes(take(r)?);
            let hi = f64::from_le_bytes(take(r)?);
            let n = u32::from_le_bytes(take(r)?) as usize;
            let periodic = take::<1, _>(r)?[0] != 0;
            axes.push(Axis {
                lo,
                hi,
                n,
                periodic,
            });
        }
        let time = f64::from_le_bytes(take(r)?);
        let count = u64::from_le_bytes(take(r)?) as usize;
        let expected: usize = axes.iter().map(|a| a.n).product();
        if count != expected {
            return Err(HjError::Format(format!(
                "{count} values for {expected} nodes"
            )));
        }
        let mut raw = vec![0u8; count * 8];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of eight")))
            .collect();
        Self::new(axes, values, time)
    }

    pub fn save(&self, path: &Path) -> Result<(), HjError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HjError> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> ValueGrid {
        let axes = vec![
            Axis::new(-1.0, 1.0, 5),
            Axis::new(0.0, 4.0, 9),
            Axis::periodic(-3.0, 3.0, 7),
        ];
        ValueGrid::from_fn(axes, 0.25, |x| 2.0 * x[0] - x[1] + 0.5)
    }

    #[test]
    fn multilinear_is_exact_on_affine_fields() {
        let g = plane();
        let (v, clamped) = g.interpolate(&[0.3, 1.7, 0.4]);
        assert!((v - (0.6 - 1.7 + 0.5)).abs() < 1e-12);
        assert!(!clamped);
        let p = g.gradient(&[0.1, 2.2, -1.0]);
        assert!((p[0] - 2.0).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12 && p[2].abs() < 1e-12);
    }

    #[test]
    fn bounded_axes_clamp_and_periodic_axes_wrap() {
        let g = plane();
        let (v, clamped) = g.interpolate(&[5.0, 1.0, 0.0]);
        assert!(clamped);
        assert!((v - (2.0 - 1.0 + 0.5)).abs() < 1e-12);
        let axes = vec![Axis::periodic(0.0, 4.0, 5)];
        let g = ValueGrid::from_fn(axes, 0.0, |x| if x[0] == 4.0 { 0.0 } else { x[0] });
        assert!((g.value(&[4.5]) - g.value(&[0.5])).abs() < 1e-12);
    }

    #[test]
    fn binary_round_trip() {
        let g = plane();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let back = ValueGrid::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, g);
        buf[0] = b'X';
        assert!(ValueGrid::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_small_axes() {
        assert!(ValueGrid::new(vec![Axis::new(0.0, 1.0, 2)], vec![0.0; 2], 0.0).is_err());
    }
}
