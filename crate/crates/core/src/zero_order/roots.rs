//! Root localization of the secular determinant on a momentum grid.

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::scalar::Real;

use super::{match_coefficients, secular_determinant, ZeroOrderOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct SkippedEnergy<T> {
    pub energy: T,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootScan<T> {
    /// Ascending eigenvalues.
    pub roots: Vec<T>,
    /// False when fewer than the requested number of roots were found.
    pub complete: bool,
    pub skipped: Vec<SkippedEnergy<T>>,
}

struct Scanner<'a, T> {
    spec: &'a PotentialSpec<T>,
    opts: &'a ZeroOrderOptions<T>,
    floor: T,
    skipped: Vec<SkippedEnergy<T>>,
}

impl<T: Real> Scanner<'_, T> {
    fn energy(&self, k: T) -> T {
        self.floor + k * k
    }

    fn det(&mut self, k: T) -> Result<Option<T>> {
        let e = self.energy(k);
        match secular_determinant(self.spec, e, self.opts) {
            Ok(v) => Ok(Some(v)),
            Err(err @ Error::DegenerateEnergy { .. }) => {
                self.skipped.push(SkippedEnergy { energy: e, reason: err.to_string() });
                Ok(None)
            }
            Err(err) => Err(err),
        }
    }

    /// Brackets (k_a, k_b) with a sign change, refining cells where |det|
    /// has a local minimum without a sign change.
    fn brackets(&mut self, ks: &[T], depth: u32, out: &mut Vec<(T, T)>) -> Result<()> {
        let mut samples = Vec::with_capacity(ks.len());
        for &k in ks {
            if let Some(v) = self.det(k)? {
                samples.push((k, v));
            }
        }
        for (i, w) in samples.windows(2).enumerate() {
            let ((ka, va), (kb, vb)) = (w[0], w[1]);
            if va.is_zero() {
                out.push((ka, ka));
            } else if va.signum() != vb.signum() && !vb.is_zero() {
                out.push((ka, kb));
            } else if depth < 3 && i > 0 {
                let (_, vp) = samples[i - 1];
                let dip = va.abs() < vp.abs() && va.abs() < vb.abs() && vp.signum() == va.signum();
                if dip {
                    let (lo, hi) = (samples[i - 1].0, kb);
                    let fine: Vec<T> = (0..=40).map(|n| lo + (hi - lo) * T::from_usize_lossy(n) / T::lit(40.0)).collect();
                    let mut sub = Vec::new();
                    self.brackets(&fine, depth + 1, &mut sub)?;
                    out.extend(sub);
                }
            }
        }
        if let Some(&(k, v)) = samples.last() {
            if v.is_zero() {
                out.push((k, k));
            }
        }
        Ok(())
    }

    fn bisect(&mut self, ka: T, kb: T) -> Result<T> {
        let (mut lo, mut hi) = (self.energy(ka), self.energy(kb));
        if lo == hi {
            return Ok(lo);
        }
        let mut f_lo = self.value_at(lo)?;
        for _ in 0..400 {
            let mid = lo + (hi - lo) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = self.value_at(mid)?;
            if f_mid.is_zero() {
                return Ok(mid);
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo + (hi - lo) * T::lit(0.5))
    }

    fn value_at(&mut self, e: T) -> Result<T> {
        secular_determinant(self.spec, e, self.opts)
    }
}

/// Eigenvalues in [E_lo, E_hi], scanning k = √(E − min H) on a uniform grid.
///
/// Sign changes that do not correspond to a C¹ state (overlap resonances of
/// an interior interval) and points on a height are reported in `skipped`.
pub fn find_eigenvalues<T: Real>(
    spec: &PotentialSpec<T>,
    e_lo: T,
    e_hi: T,
    count: usize,
    opts: &ZeroOrderOptions<T>,
) -> Result<RootScan<T>> {
    if !(e_lo < e_hi) || count == 0 {
        return Err(Error::Contract(format!("need E_lo < E_hi and count ≥ 1 (got {e_lo}, {e_hi}, {count})")));
    }
    let floor = spec.min_height();
    if e_hi <= floor {
        return Ok(RootScan { roots: Vec::new(), complete: false, skipped: Vec::new() });
    }
    let k_lo = (e_lo - floor).max(T::zero()).sqrt();
    let k_hi = (e_hi - floor).sqrt();
    let steps = (T::one() / opts.scan_step).ceil().to_usize().unwrap_or(500).max(2);
    let ks: Vec<T> = (0..=steps)
        .map(|i| k_lo + (k_hi - k_lo) * T::from_usize_lossy(i) / T::from_usize_lossy(steps))
        .collect();
    let mut scanner = Scanner { spec, opts, floor, skipped: Vec::new() };
    let mut brackets = Vec::new();
    scanner.brackets(&ks, 0, &mut brackets)?;
    brackets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    brackets.dedup();
    let mut roots: Vec<T> = Vec::new();
    for (ka, kb) in brackets {
        if roots.len() >= count {
            break;
        }
        let e = scanner.bisect(ka, kb)?;
        if roots.last().is_some_and(|&r| (e - r).abs() <= T::epsilon() * T::lit(16.0) * e.abs().max(T::one())) {
            continue;
        }
        if spec.interior_count() >= 2 {
            let verdict = match_coefficients(spec, e, opts).and_then(|st| st.overlap_mismatch(&opts.tol));
            match verdict {
                Ok(m) if m <= T::lit(1e-6) => {}
                Err(Error::NormalizationObstruction { .. }) => {}
                Ok(m) => {
                    scanner.skipped.push(SkippedEnergy {
                        energy: e,
                        reason: format!("sign change without a C¹ state (overlap mismatch {m:e})"),
                    });
                    continue;
                }
                Err(err) => {
                    scanner.skipped.push(SkippedEnergy { energy: e, reason: err.to_string() });
                    continue;
                }
            }
        }
        roots.push(e);
    }
    Ok(RootScan { complete: roots.len() >= count, roots, skipped: scanner.skipped })
}
