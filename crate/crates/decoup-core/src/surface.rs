//! Separable polynomial hypersurfaces `(ξ, φ_1(ξ_1)+…+φ_s(ξ_s)+ξ_{s+1}^m+…)`
//! and the nondegeneracy check for their one-dimensional phases.
//!
//! Phase coefficients are stored in double precision: phases feed only the
//! floating-point evaluator, never the exact cap algebra.

use crate::geometry::SurfaceId;
use crate::scalar::Scalar;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// Dense univariate polynomial `Σ coeffs[i] t^i` over f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    /// t^k.
    pub fn monomial(k: u32) -> Self {
        let mut coeffs = vec![0.0; k as usize + 1];
        coeffs[k as usize] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn eval_scalar<S: Scalar>(&self, t: S) -> S {
        let mut acc = S::zero();
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + S::from_f64c(c);
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| c * i as f64)
                .collect(),
        )
    }

    /// n-th derivative.
    pub fn derivative_n(&self, n: u32) -> Poly {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * k).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; len];
        for (i, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0.0);
            let b = other.coeffs.get(i).copied().unwrap_or(0.0);
            *slot = a - b;
        }
        Poly::new(out)
    }

    /// Composition with the affine map `t = offset + scale*η`, expanded by
    /// binomial sums. Exact in f64 for dyadic inputs at desk scale.
    pub fn affine_substitute(&self, offset: f64, scale: f64) -> Poly {
        let d = self.degree();
        let mut out = vec![0.0; d + 1];
        // powers of offset and binomial coefficients
        let mut binom = vec![vec![0.0f64; d + 1]; d + 1];
        for i in 0..=d {
            binom[i][0] = 1.0;
            for j in 1..=i {
                binom[i][j] = binom[i - 1][j - 1] + *binom[i - 1].get(j).unwrap_or(&0.0);
            }
        }
        for (i, &ci) in self.coeffs.iter().enumerate() {
            if ci == 0.0 {
                continue;
            }
            // c_i (offset + scale η)^i
            let mut off_pow = vec![1.0f64; i + 1];
            for k in 1..=i {
                off_pow[k] = off_pow[k - 1] * offset;
            }
            let mut sc_pow = 1.0f64;
            for j in 0..=i {
                out[j] += ci * binom[i][j] * sc_pow * off_pow[i - j];
                sc_pow *= scale;
            }
        }
        Poly::new(out)
    }

    /// Roots in the closed interval `[lo, hi]`, found by recursive isolation:
    /// the derivative's roots split the interval into monotone segments and
    /// each sign change is bisected to absolute tolerance 1e-12.
    pub fn roots_on(&self, lo: f64, hi: f64) -> Vec<f64> {
        const TOL: f64 = 1e-12;
        if self.is_zero() || self.degree() == 0 {
            return Vec::new();
        }
        if self.degree() == 1 {
            let r = -self.coeffs[0] / self.coeffs[1];
            if r >= lo - TOL && r <= hi + TOL {
                return vec![r.clamp(lo, hi)];
            }
            return Vec::new();
        }
        let mut cuts = self.derivative().roots_on(lo, hi);
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() <= TOL);
        let mut roots = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if fa == 0.0 {
                roots.push(a);
            }
            if fa * fb < 0.0 {
                roots.push(self.bisect(a, b));
            }
        }
        if let Some(&last) = cuts.last() {
            if self.eval(last) == 0.0 {
                roots.push(last);
            }
        }
        roots.dedup_by(|a, b| (*a - *b).abs() <= TOL);
        roots
    }

    fn bisect(&self, mut a: f64, mut b: f64) -> f64 {
        let mut fa = self.eval(a);
        for _ in 0..200 {
            if b - a <= 1e-12 {
                break;
            }
            let mid = 0.5 * (a + b);
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if fa * fm < 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        0.5 * (a + b)
    }

    /// (min, max) over the closed interval, via critical points plus
    /// endpoint evaluation.
    pub fn extrema_on(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut mn = self.eval(lo).min(self.eval(hi));
        let mut mx = self.eval(lo).max(self.eval(hi));
        for r in self.derivative().roots_on(lo, hi) {
            let v = self.eval(r);
            mn = mn.min(v);
            mx = mx.max(v);
        }
        (mn, mx)
    }

    /// sup |p| over the closed interval.
    pub fn sup_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let (mn, mx) = self.extrema_on(lo, hi);
        mn.abs().max(mx.abs())
    }
}

/// One-dimensional phase component with its declared nondegeneracy constant.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpec {
    poly: Poly,
    c: f64,
}

impl PhaseSpec {
    pub fn new(coefficients: Vec<f64>, c: f64) -> Self {
        Self {
            poly: Poly::new(coefficients),
            c,
        }
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn degeneracy_constant(&self) -> f64 {
        self.c
    }
}

/// Outcome of the nondegeneracy check for one phase.
#[derive(Clone, Debug)]
pub struct NondegReport {
    pub ok: bool,
    /// First derivative order whose range violates the requirements.
    pub violated_order: Option<u32>,
    /// (min, max) of each derivative order 0..=m over [0,1].
    pub derivative_ranges: Vec<(f64, f64)>,
    /// Range of the second derivative over [0,1].
    pub second_derivative_range: (f64, f64),
    /// Measured min/max ratio of the second derivative.
    pub measured_ratio: f64,
}

/// Relaxed pinching ratio accepted by default: 2^{-(m-2)}.
///
/// Rescaling a monomial coordinate over a full coarse cap produces phases
/// whose second-derivative ratio degrades to exactly this value, so the
/// laboratory must accept its own rescaling outputs.
pub fn default_ratio(m: u32) -> f64 {
    2f64.powi(-(m as i32 - 2))
}

// Relative slack applied to the closed-interval range checks; endpoint
// evaluations are exact for dyadic data, the slack covers bisection residue.
const RANGE_SLACK: f64 = 1e-9;

/// Checks that `phase` is m-nondegenerate on [0,1] with the given pinching
/// ratio: every derivative of order 0..=m has range inside [0, C], and the
/// second derivative satisfies `min >= ratio * max` with `max <= C`.
///
/// Errors when the polynomial degree exceeds `m`; a failing check is reported,
/// not an error.
pub fn check_m_nondegenerate(phase: &PhaseSpec, m: u32, ratio: f64) -> Result<NondegReport> {
    if phase.poly.degree() > m as usize {
        return Err(Error::DegreeExceedsM {
            degree: phase.poly.degree(),
            m,
        });
    }
    let c = phase.c;
    let slack = RANGE_SLACK * c.abs().max(1.0);
    let mut ranges = Vec::with_capacity(m as usize + 1);
    let mut p = phase.poly.clone();
    for _ in 0..=m {
        ranges.push(p.extrema_on(0.0, 1.0));
        p = p.derivative();
    }
    let (lo2, hi2) = ranges[2];
    let measured_ratio = if hi2 > 0.0 { lo2 / hi2 } else { f64::NAN };
    let mut violated = None;
    for (order, &(mn, mx)) in ranges.iter().enumerate() {
        let range_ok = mn >= -slack && mx <= c + slack;
        let pinch_ok = order != 2 || (hi2 > 0.0 && lo2 + slack >= ratio * hi2);
        if !range_ok || !pinch_ok {
            violated = Some(order as u32);
            break;
        }
    }
    Ok(NondegReport {
        ok: violated.is_none(),
        violated_order: violated,
        derivative_ranges: ranges,
        second_derivative_range: (lo2, hi2),
        measured_ratio,
    })
}

/// Phase attached to one ξ-coordinate.
#[derive(Clone, Debug, PartialEq)]
pub enum CoordPhase {
    /// Declared m-nondegenerate polynomial phase.
    Nondegenerate(PhaseSpec),
    /// The monomial t ↦ t^m.
    Monomial,
}

impl CoordPhase {
    pub fn is_nondegenerate(&self) -> bool {
        matches!(self, CoordPhase::Nondegenerate(_))
    }
}

/// Hypersurface `{(ξ, Σ_j phase_j(ξ_j)) : ξ ∈ [0,1]^{n-1}}` with `s`
/// nondegenerate phase coordinates and `n-1-s` monomial coordinates.
#[derive(Clone, Debug)]
pub struct SurfaceSpec {
    n: usize,
    m: u32,
    coords: Vec<CoordPhase>,
    id: SurfaceId,
}

/// JSON schema for canonical surfaces (phases listed first).
#[derive(Serialize, Deserialize)]
struct SurfaceJson {
    n: usize,
    m: u32,
    s: usize,
    phases: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: f64,
}

impl SurfaceSpec {
    /// Canonical surface: `s` phases on the leading coordinates, monomials on
    /// the rest. Each phase must pass the nondegeneracy check with its stated
    /// constant at the default ratio.
    pub fn new(n: usize, m: u32, phases: Vec<PhaseSpec>) -> Result<Self> {
        let s = phases.len();
        if s > n.saturating_sub(1) {
            return Err(Error::DimensionMismatch {
                context: "SurfaceSpec phases",
                expected: n - 1,
                got: s,
            });
        }
        let mut coords: Vec<CoordPhase> =
            phases.into_iter().map(CoordPhase::Nondegenerate).collect();
        coords.resize(n - 1, CoordPhase::Monomial);
        Self::from_coords(n, m, coords)
    }

    /// Pure monomial surface (s = 0).
    pub fn monomial(n: usize, m: u32) -> Result<Self> {
        Self::new(n, m, Vec::new())
    }

    /// Surface with phases in arbitrary coordinate positions, as produced by
    /// rescaling. Every nondegenerate phase is validated at the default ratio.
    pub fn from_coords(n: usize, m: u32, coords: Vec<CoordPhase>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("ambient dimension n={n} must be >= 2")));
        }
        if m < 4 || m % 2 != 0 {
            return Err(Error::Config(format!("degree m={m} must be even and >= 4")));
        }
        if coords.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                context: "SurfaceSpec coords",
                expected: n - 1,
                got: coords.len(),
            });
        }
        let ratio = default_ratio(m);
        for phase in coords.iter().filter_map(|c| match c {
            CoordPhase::Nondegenerate(p) => Some(p),
            CoordPhase::Monomial => None,
        }) {
            let report = check_m_nondegenerate(phase, m, ratio)?;
            if !report.ok {
                return Err(Error::Degenerate {
                    order: report.violated_order.unwrap_or(0),
                });
            }
        }
        let id = Self::content_id(n, m, &coords);
        Ok(Self { n, m, coords, id })
    }

    fn content_id(n: usize, m: u32, coords: &[CoordPhase]) -> SurfaceId {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        n.hash(&mut h);
        m.hash(&mut h);
        for c in coords {
            match c {
                CoordPhase::Monomial => 0u8.hash(&mut h),
                CoordPhase::Nondegenerate(p) => {
                    1u8.hash(&mut h);
                    for &c in p.poly.coeffs() {
                        c.to_bits().hash(&mut h);
                    }
                    p.c.to_bits().hash(&mut h);
                }
            }
        }
        SurfaceId(h.finish())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of nondegenerate-phase coordinates.
    pub fn s(&self) -> usize {
        self.coords.iter().filter(|c| c.is_nondegenerate()).count()
    }

    pub fn coords(&self) -> &[CoordPhase] {
        &self.coords
    }

    pub fn id(&self) -> SurfaceId {
        self.id
    }

    /// The phase polynomial of coordinate `j` (monomial coordinates expand to
    /// t^m).
    pub fn coord_poly(&self, j: usize) -> Poly {
        match &self.coords[j] {
            CoordPhase::Nondegenerate(p) => p.poly.clone(),
            CoordPhase::Monomial => Poly::monomial(self.m),
        }
    }

    /// sup |φ_j'| over `[lo, hi]`, used for quadrature resolution bounds.
    pub fn deriv_sup_abs(&self, j: usize, lo: f64, hi: f64) -> f64 {
        self.coord_poly(j).derivative().sup_abs_on(lo, hi)
    }

    /// Σ_j phase_j(ξ_j).
    pub fn phase_total<S: Scalar>(&self, xi: &[S]) -> Result<S> {
        if xi.len() != self.n - 1 {
            return Err(Error::DimensionMismatch {
                context: "phase_total",
                expected: self.n - 1,
                got: xi.len(),
            });
        }
        let mut acc = S::zero();
        for (j, &x) in xi.iter().enumerate() {
            acc = acc
                + match &self.coords[j] {
                    CoordPhase::Nondegenerate(p) => p.poly.eval_scalar(x),
                    CoordPhase::Monomial => x.powi(self.m as i32),
                };
        }
        Ok(acc)
    }

    /// (ξ, phase_total(ξ)) ∈ ℝ^n.
    pub fn graph_point<S: Scalar>(&self, xi: &[S]) -> Result<Vec<S>> {
        let last = self.phase_total(xi)?;
        let mut out = Vec::with_capacity(self.n);
        out.extend_from_slice(xi);
        out.push(last);
        Ok(out)
    }

    /// Serialize a canonical surface (phases on leading coordinates) to the
    /// JSON schema `{"n", "m", "s", "phases", "C"}`.
    pub fn to_json(&self) -> Result<String> {
        let s = self.s();
        if self.coords[..s].iter().any(|c| !c.is_nondegenerate()) {
            return Err(Error::Config(
                "only canonical surfaces (phases first) serialize to JSON".into(),
            ));
        }
        let phases: Vec<Vec<f64>> = self.coords[..s]
            .iter()
            .map(|c| match c {
                CoordPhase::Nondegenerate(p) => p.poly.coeffs().to_vec(),
                CoordPhase::Monomial => unreachable!(),
            })
            .collect();
        let c = self.coords[..s]
            .iter()
            .map(|c| match c {
                CoordPhase::Nondegenerate(p) => p.c,
                CoordPhase::Monomial => unreachable!(),
            })
            .fold(0.0f64, f64::max);
        serde_json::to_string(&SurfaceJson {
            n: self.n,
            m: self.m,
            s,
            phases,
            c: if s == 0 { 0.0 } else { c },
        })
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let parsed: SurfaceJson =
            serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        if parsed.phases.len() != parsed.s {
            return Err(Error::Config(format!(
                "surface JSON declares s={} but lists {} phases",
                parsed.s,
                parsed.phases.len()
            )));
        }
        let phases = parsed
            .phases
            .into_iter()
            .map(|coeffs| PhaseSpec::new(coeffs, parsed.c))
            .collect();
        Self::new(parsed.n, parsed.m, phases)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_phase_total_vanishes_at_origin() {
        let s = SurfaceSpec::monomial(3, 4).unwrap();
        assert_eq!(s.phase_total(&[0.0f64, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn monomial_phase_total_at_ones_counts_coordinates() {
        let s = SurfaceSpec::monomial(3, 4).unwrap();
        assert_eq!(s.phase_total(&[1.0f64, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn mixed_phase_total_adds_quadratic_and_quartic() {
        let s = SurfaceSpec::new(3, 4, vec![PhaseSpec::new(vec![0.0, 0.0, 1.0], 2.0)]).unwrap();
        let v: f64 = s.phase_total(&[0.5, 0.5]).unwrap();
        assert!((v - 0.3125).abs() < 1e-15);
    }

    #[test]
    fn phase_total_rejects_wrong_dimension() {
        let s = SurfaceSpec::monomial(3, 4).unwrap();
        assert!(s.phase_total(&[0.5f64]).is_err());
    }

    #[test]
    fn graph_point_appends_the_phase() {
        let s = SurfaceSpec::monomial(3, 4).unwrap();
        assert_eq!(s.graph_point(&[0.0f64, 0.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert_eq!(s.graph_point(&[1.0f64, 0.0]).unwrap(), vec![1.0, 0.0, 1.0]);
        let s6 = SurfaceSpec::monomial(2, 6).unwrap();
        let p = s6.graph_point(&[0.5f64]).unwrap();
        assert_eq!(p, vec![0.5, 0.015625]);
    }

    #[test]
    fn quadratic_phase_is_m_nondegenerate_with_strict_ratio() {
        let phase = PhaseSpec::new(vec![0.0, 0.0, 1.0], 2.0);
        for m in [4u32, 6, 8] {
            let report = check_m_nondegenerate(&phase, m, 0.5).unwrap();
            assert!(report.ok, "t^2 must pass for m={m}: {report:?}");
            assert_eq!(report.second_derivative_range, (2.0, 2.0));
        }
    }

    #[test]
    fn pure_quartic_fails_because_second_derivative_vanishes() {
        let phase = PhaseSpec::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], 12.0);
        let report = check_m_nondegenerate(&phase, 4, 0.5).unwrap();
        assert!(!report.ok);
        assert_eq!(report.violated_order, Some(2));
        assert_eq!(report.second_derivative_range.0, 0.0);
    }

    #[test]
    fn rescaled_quartic_phase_passes_with_relaxed_ratio() {
        // 16[(1/2+η/2)^4 - 1/16 - η/4] = 6η² + 4η³ + η⁴
        let phase = PhaseSpec::new(vec![0.0, 0.0, 6.0, 4.0, 1.0], 48.0);
        let report = check_m_nondegenerate(&phase, 4, 0.25).unwrap();
        assert!(report.ok, "{report:?}");
        assert_eq!(report.second_derivative_range, (12.0, 48.0));
        assert!((report.measured_ratio - 0.25).abs() < 1e-12);
        // strict ratio 1/2 must reject the same phase
        let strict = check_m_nondegenerate(&phase, 4, 0.5).unwrap();
        assert!(!strict.ok);
    }

    #[test]
    fn degree_above_m_is_an_error() {
        let phase = PhaseSpec::new(vec![0.0; 8], 1.0);
        assert!(matches!(
            check_m_nondegenerate(&PhaseSpec::new({
                let mut v = vec![0.0; 7];
                v[6] = 1.0;
                v
            }, 1.0), 4, 0.5),
            Err(Error::DegreeExceedsM { .. })
        ));
        // degree <= m is fine even when coefficients are zero
        assert!(check_m_nondegenerate(&phase, 8, 0.5).is_ok());
    }

    #[test]
    fn monotone_in_each_coordinate_for_nonnegative_coefficients() {
        let s = SurfaceSpec::new(
            3,
            4,
            vec![PhaseSpec::new(vec![0.0, 0.5, 1.0], 2.5)],
        )
        .unwrap();
        let mut prev = -1.0;
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let v: f64 = s.phase_total(&[x, 0.7]).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn matches_plain_monomial_sum_on_a_dense_grid() {
        let s = SurfaceSpec::monomial(3, 6).unwrap();
        for i in 0..=40 {
            for j in 0..=40 {
                let (x, y) = (i as f64 / 40.0, j as f64 / 40.0);
                let direct = x.powi(6) + y.powi(6);
                let v: f64 = s.phase_total(&[x, y]).unwrap();
                assert!((v - direct).abs() <= 1e-15 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn json_schema_round_trips_canonical_surfaces() {
        let s = SurfaceSpec::new(
            4,
            4,
            vec![PhaseSpec::new(vec![0.0, 0.0, 1.0], 2.0)],
        )
        .unwrap();
        let json = s.to_json().unwrap();
        let back = SurfaceSpec::from_json(&json).unwrap();
        assert_eq!(back.n(), 4);
        assert_eq!(back.m(), 4);
        assert_eq!(back.s(), 1);
        assert_eq!(back.coord_poly(0).coeffs(), &[0.0, 0.0, 1.0]);
        assert_eq!(back.coord_poly(2).coeffs(), &[0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn constructor_rejects_degenerate_declared_phases() {
        // t^4 is not m-nondegenerate for any C
        let bad = PhaseSpec::new(vec![0.0, 0.0, 0.0, 0.0, 1.0], 12.0);
        assert!(SurfaceSpec::new(3, 4, vec![bad]).is_err());
    }

    #[test]
    fn polynomial_extrema_locate_interior_critical_points() {
        // p(t) = t(1-t): max 1/4 at t=1/2
        let p = Poly::new(vec![0.0, 1.0, -1.0]);
        let (mn, mx) = p.extrema_on(0.0, 1.0);
        assert!((mx - 0.25).abs() < 1e-12);
        assert_eq!(mn, 0.0);
        // cubic with interior extrema: p = 2t³ - 3t² + 1, p' roots 0 and 1
        let q = Poly::new(vec![1.0, 0.0, -3.0, 2.0]);
        let (qmn, qmx) = q.extrema_on(0.0, 1.0);
        assert!((qmn - 0.0).abs() < 1e-10 && (qmx - 1.0).abs() < 1e-10);
    }

    #[test]
    fn affine_substitution_reproduces_the_rescaled_quartic() {
        // (1/2 + η/2)^4 expanded from t^4
        let p = Poly::monomial(4).affine_substitute(0.5, 0.5);
        let expect = [0.0625, 0.25, 0.375, 0.25, 0.0625];
        for (a, b) in p.coeffs().iter().zip(expect) {
            assert_eq!(*a, b);
        }
    }
}
