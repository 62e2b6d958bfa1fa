//! Interval, cap, and box value types with exact dyadic endpoints.
//!
//! Caps are closed products of per-coordinate intervals; partition checks
//! require only interior disjointness, so neighbouring caps may share faces.

use crate::dyadic::DyadicRational;
use crate::scalar::Scalar;
use crate::{Error, Result};
use std::fmt;

/// Identifies the surface a cap family was built for.
///
/// Ids are content-derived within a process; they exist so that operations
/// with a "same surface" precondition can detect mixups cheaply.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SurfaceId(pub u64);

/// Structural role of a coordinate interval inside a cap.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Role {
    /// Side of an R^{-1/2}-cube along a nondegenerate-phase coordinate.
    Cube,
    /// The degenerate block `[0, scale^{-1/m}]` next to the flat point.
    Flat,
    /// Piece `level`/`slot` of the anisotropic dyadic ladder: slot μ of the
    /// level-k block `[2^{k-1} scale^{-1/m}, 2^k scale^{-1/m}]`.
    Curved { level: u32, slot: u64 },
}

impl Role {
    pub fn is_cube(&self) -> bool {
        matches!(self, Role::Cube)
    }
    pub fn is_flat(&self) -> bool {
        matches!(self, Role::Flat)
    }
    pub fn is_curved(&self) -> bool {
        matches!(self, Role::Curved { .. })
    }
}

/// Closed interval with exact dyadic endpoints and a structural role.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: DyadicRational,
    hi: DyadicRational,
    role: Role,
}

impl Interval {
    pub fn new(lo: DyadicRational, hi: DyadicRational, role: Role) -> Result<Self> {
        if lo >= hi {
            return Err(Error::EmptyInterval {
                lo: lo.to_string(),
                hi: hi.to_string(),
            });
        }
        Ok(Self { lo, hi, role })
    }

    /// The degenerate block `[0, 2^{-scale_log2/m}]`.
    pub fn flat(scale_log2: u32, m: u32) -> Self {
        let hi = DyadicRational::pow2(-((scale_log2 / m) as i64));
        Self {
            lo: DyadicRational::zero(),
            hi,
            role: Role::Flat,
        }
    }

    /// Slot μ (1-based) of level k of the ladder at scale `R = 2^{scale_log2}`:
    /// left endpoint `2^{k-1} R^{-1/m} + (μ-1) len`, exact length
    /// `len = 2^{-(m-2)(k-1)/2} R^{-1/m}`.
    pub fn curved(level: u32, slot: u64, scale_log2: u32, m: u32) -> Self {
        debug_assert!(level >= 1 && slot >= 1);
        debug_assert_eq!(scale_log2 % m, 0);
        let inv_root = -((scale_log2 / m) as i64); // log2 of R^{-1/m}
        let len_log2 = inv_root - (((m - 2) as i64) * ((level - 1) as i64)) / 2;
        let len = DyadicRational::pow2(len_log2);
        let level_start = DyadicRational::pow2((level as i64 - 1) + inv_root);
        let lo = level_start.add_exact(&len.mul_exact(&DyadicRational::from_u64(slot - 1)));
        let hi = level_start.add_exact(&len.mul_exact(&DyadicRational::from_u64(slot)));
        Self {
            lo,
            hi,
            role: Role::Curved { level, slot },
        }
    }

    /// Side `[i 2^{-scale_log2/2}, (i+1) 2^{-scale_log2/2}]` of a cube grid.
    pub fn cube(index: u64, scale_log2: u32) -> Self {
        debug_assert_eq!(scale_log2 % 2, 0);
        let len = DyadicRational::pow2(-((scale_log2 / 2) as i64));
        Self {
            lo: len.mul_exact(&DyadicRational::from_u64(index)),
            hi: len.mul_exact(&DyadicRational::from_u64(index + 1)),
            role: Role::Cube,
        }
    }

    pub fn lo(&self) -> &DyadicRational {
        &self.lo
    }
    pub fn hi(&self) -> &DyadicRational {
        &self.hi
    }
    pub fn role(&self) -> Role {
        self.role
    }

    pub fn length(&self) -> DyadicRational {
        self.hi
            .checked_sub(&self.lo)
            .expect("interval invariant lo < hi")
    }

    /// Open interiors intersect.
    pub fn interiors_overlap(&self, other: &Self) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Closed containment `other ⊆ self`.
    pub fn contains_closed(&self, other: &Self) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        0.5 * (self.lo.to_f64_lossy() + self.hi.to_f64_lossy())
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]({:?})", self.lo, self.hi, self.role)
    }
}

/// Product of plain dyadic intervals, used for region bounds and containment
/// queries where roles do not matter.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DyadicBox {
    bounds: Vec<(DyadicRational, DyadicRational)>,
}

impl DyadicBox {
    pub fn new(bounds: Vec<(DyadicRational, DyadicRational)>) -> Self {
        debug_assert!(bounds.iter().all(|(lo, hi)| lo < hi));
        Self { bounds }
    }

    /// `[0,1]^d`.
    pub fn unit(d: usize) -> Self {
        Self {
            bounds: (0..d)
                .map(|_| (DyadicRational::zero(), DyadicRational::one()))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(DyadicRational, DyadicRational)] {
        &self.bounds
    }

    pub fn volume(&self) -> DyadicRational {
        let mut v = DyadicRational::one();
        for (lo, hi) in &self.bounds {
            v = v.mul_exact(&hi.checked_sub(lo).expect("box invariant lo < hi"));
        }
        v
    }

    /// Closed containment of a cap in this box.
    pub fn contains_cap(&self, cap: &Cap) -> bool {
        cap.coords().len() == self.dim()
            && cap
                .coords()
                .iter()
                .zip(&self.bounds)
                .all(|(iv, (lo, hi))| lo <= iv.lo() && iv.hi() <= hi)
    }

    pub fn to_f64_bounds(&self) -> Vec<(f64, f64)> {
        self.bounds
            .iter()
            .map(|(lo, hi)| (lo.to_f64_lossy(), hi.to_f64_lossy()))
            .collect()
    }
}

/// Cap: product of coordinate intervals at a common dyadic scale.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cap {
    coords: Vec<Interval>,
    scale_log2: u32,
    surface_id: SurfaceId,
}

impl Cap {
    pub fn new(coords: Vec<Interval>, scale_log2: u32, surface_id: SurfaceId) -> Self {
        Self {
            coords,
            scale_log2,
            surface_id,
        }
    }

    pub fn coords(&self) -> &[Interval] {
        &self.coords
    }

    /// Number of ξ-coordinates (n − 1).
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// log2 of the scale R (or K) the cap belongs to.
    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    pub fn surface_id(&self) -> SurfaceId {
        self.surface_id
    }

    pub fn cube_coord_count(&self) -> usize {
        self.coords.iter().filter(|c| c.role().is_cube()).count()
    }

    pub fn bounds(&self) -> DyadicBox {
        DyadicBox::new(
            self.coords
                .iter()
                .map(|iv| (iv.lo().clone(), iv.hi().clone()))
                .collect(),
        )
    }

    /// Exact product of coordinate lengths.
    pub fn volume(&self) -> DyadicRational {
        let mut v = DyadicRational::one();
        for iv in &self.coords {
            v = v.mul_exact(&iv.length());
        }
        v
    }

    /// Closed containment `other ⊆ self` coordinate by coordinate.
    pub fn contains_closed(&self, other: &Cap) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| a.contains_closed(b))
    }
}

/// Exact volume of a cap.
pub fn cap_volume(cap: &Cap) -> DyadicRational {
    cap.volume()
}

/// True iff the open interiors of two caps are disjoint (exact check).
///
/// Callers are expected to compare caps of a common family (same scale, same
/// surface); mismatched dimensions are treated as disjoint.
pub fn caps_disjoint_interiors(a: &Cap, b: &Cap) -> bool {
    debug_assert_eq!(a.surface_id(), b.surface_id());
    debug_assert_eq!(a.scale_log2(), b.scale_log2());
    if a.dim() != b.dim() {
        return true;
    }
    // interiors intersect iff they overlap in every coordinate
    !a.coords
        .iter()
        .zip(&b.coords)
        .all(|(x, y)| x.interiors_overlap(y))
}

/// Axis-aligned box in physical space: carrier for balls B_R and their
/// rescaled images.
#[derive(Clone, Debug, PartialEq)]
pub struct RealBox<S: Scalar> {
    center: Vec<S>,
    half_widths: Vec<S>,
}

impl<S: Scalar> RealBox<S> {
    pub fn new(center: Vec<S>, half_widths: Vec<S>) -> Result<Self> {
        if center.len() != half_widths.len() {
            return Err(Error::DimensionMismatch {
                context: "RealBox",
                expected: center.len(),
                got: half_widths.len(),
            });
        }
        if half_widths.iter().any(|h| *h <= S::zero()) {
            return Err(Error::NonPositiveHalfWidth);
        }
        Ok(Self {
            center,
            half_widths,
        })
    }

    /// Cube of half-width `r` centered at the origin of ℝ^n (the box carrier
    /// for the ball B_r).
    pub fn ball(r: S, n: usize) -> Self {
        Self {
            center: vec![S::zero(); n],
            half_widths: vec![r; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[S] {
        &self.center
    }

    pub fn half_widths(&self) -> &[S] {
        &self.half_widths
    }

    pub fn lo(&self, j: usize) -> S {
        self.center[j] - self.half_widths[j]
    }

    pub fn hi(&self, j: usize) -> S {
        self.center[j] + self.half_widths[j]
    }

    pub fn contains(&self, x: &[S]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .enumerate()
                .all(|(j, &v)| (v - self.center[j]).abs() <= self.half_widths[j])
    }

    pub fn volume(&self) -> S {
        let two = S::from_f64c(2.0);
        self.half_widths
            .iter()
            .fold(S::one(), |acc, &h| acc * two * h)
    }

    /// Dilate half-widths by `factor` about the same center.
    pub fn dilate(&self, factor: S) -> Self {
        Self {
            center: self.center.clone(),
            half_widths: self.half_widths.iter().map(|&h| h * factor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn dy(m: u64, e: i64) -> DyadicRational {
        DyadicRational::new(BigUint::from(m), e)
    }

    fn plain(lo: DyadicRational, hi: DyadicRational) -> Interval {
        Interval::new(lo, hi, Role::Flat).unwrap()
    }

    fn cap2(a: (u64, i64, u64, i64), b: (u64, i64, u64, i64)) -> Cap {
        Cap::new(
            vec![
                plain(dy(a.0, a.1), dy(a.2, a.3)),
                plain(dy(b.0, b.1), dy(b.2, b.3)),
            ],
            8,
            SurfaceId(0),
        )
    }

    #[test]
    fn quarter_square_cap_has_volume_one_quarter() {
        let c = cap2((0, 0, 1, -1), (0, 0, 1, -1));
        assert_eq!(cap_volume(&c), dy(1, -2));
    }

    #[test]
    fn r_half_cube_volume_in_two_xi_coordinates() {
        // R = 2^8, cube side R^{-1/2} = 2^{-4}: volume 2^{-8}
        let c = Cap::new(
            vec![Interval::cube(0, 8), Interval::cube(3, 8)],
            8,
            SurfaceId(0),
        );
        assert_eq!(cap_volume(&c), dy(1, -8));
    }

    #[test]
    fn mixed_cap_volume_is_product_of_lengths() {
        // [1/2,5/8] x [0,1/4] -> (1/8)(1/4) = 2^{-5}
        let c = cap2((1, -1, 5, -3), (0, 0, 1, -2));
        assert_eq!(cap_volume(&c), dy(1, -5));
    }

    #[test]
    fn caps_sharing_a_face_have_disjoint_interiors() {
        let a = cap2((0, 0, 1, -2), (0, 0, 1, -2));
        let b = cap2((1, -2, 1, -1), (0, 0, 1, -2));
        assert!(caps_disjoint_interiors(&a, &b));
    }

    #[test]
    fn identical_caps_are_not_interior_disjoint() {
        let a = cap2((0, 0, 1, -2), (0, 0, 1, -2));
        assert!(!caps_disjoint_interiors(&a, &a.clone()));
    }

    #[test]
    fn interior_overlapping_caps_are_detected() {
        let a = cap2((0, 0, 1, -2), (0, 0, 1, -2));
        let b = cap2((1, -3, 3, -3), (0, 0, 1, -2));
        assert!(!caps_disjoint_interiors(&a, &b));
    }

    #[test]
    fn curved_interval_matches_ladder_endpoints() {
        // R = 2^8, m = 4: level 2 has 4 slots of length 2^{-1}*2^{-2} = 1/8
        // starting at 2^1 * 2^{-2} = 1/2.
        let iv = Interval::curved(2, 1, 8, 4);
        assert_eq!(iv.lo(), &dy(1, -1));
        assert_eq!(iv.hi(), &dy(5, -3));
        assert_eq!(iv.length(), dy(1, -3));
        let iv4 = Interval::curved(2, 4, 8, 4);
        assert_eq!(iv4.hi(), &DyadicRational::one());
    }

    #[test]
    fn degenerate_interval_construction_fails() {
        assert!(Interval::new(dy(1, -1), dy(1, -1), Role::Flat).is_err());
        assert!(Interval::new(dy(1, 0), dy(1, -1), Role::Flat).is_err());
    }

    #[test]
    fn real_box_rejects_nonpositive_half_widths() {
        assert!(RealBox::new(vec![0.0f64], vec![0.0]).is_err());
        assert!(RealBox::new(vec![0.0f64, 0.0], vec![1.0, 2.0]).is_ok());
    }

    proptest! {
        #[test]
        fn cap_volume_is_multiplicative_under_cartesian_product(
            ends in proptest::collection::vec((0u64..1000, 1u64..1000), 1..4)
        ) {
            let ivs: Vec<Interval> = ends
                .iter()
                .map(|&(a, len)| plain(dy(a, -12), dy(a + len, -12)))
                .collect();
            let split = ivs.len() / 2;
            let left = Cap::new(ivs[..split.max(1)].to_vec(), 8, SurfaceId(0));
            let full = Cap::new(ivs.clone(), 8, SurfaceId(0));
            if split >= 1 && split < ivs.len() {
                let right = Cap::new(ivs[split..].to_vec(), 8, SurfaceId(0));
                prop_assert_eq!(
                    full.volume(),
                    left.volume().mul_exact(&right.volume())
                );
            } else {
                prop_assert_eq!(full.volume(), left.volume());
            }
        }
    }
}
