//! Anisotropic dyadic cap families covering `[0,1]^{n-1}`, the Ω-region
//! splitting at a coarse scale, coarse caps, and exact cover verification.
//!
//! Scales are accepted only in the conforming forms R = 2^(m·l) and
//! K = 2^(m·s'); anything else is a hard error. Enumeration order is
//! lexicographic in (coordinate, level, slot) so CSV output and reductions
//! are deterministic.

use crate::dyadic::DyadicRational;
use crate::geometry::{Cap, DyadicBox, Interval, Role, SurfaceId};
use crate::surface::{CoordPhase, SurfaceSpec};
use crate::{Error, Result};
use std::collections::HashMap;

/// Number of ladder levels l with R = 2^(m·l); errors on non-conforming R.
pub fn levels_for_scale(scale_log2: u32, m: u32) -> Result<u32> {
    if m == 0 || scale_log2 == 0 || scale_log2 % m != 0 {
        return Err(Error::InvalidScale {
            got: format!("2^{scale_log2}"),
            m,
        });
    }
    Ok(scale_log2 / m)
}

/// Closed-form interval count `1 + Σ_{k=1}^{l} 2^{(m/2)(k-1)}`.
pub fn interval_count(m: u32, levels: u32) -> u128 {
    1 + (1..=levels).map(|k| 1u128 << ((m / 2) * (k - 1))).sum::<u128>()
}

/// The one-dimensional decomposition of [0,1] at scale R = 2^(scale_log2):
/// the flat block [0, R^{-1/m}] followed by all ladder pieces, in
/// (level, slot) order. The union is exactly [0,1] with pairwise disjoint
/// interiors.
pub fn interval_family(scale_log2: u32, m: u32) -> Result<Vec<Interval>> {
    let levels = levels_for_scale(scale_log2, m)?;
    let mut out = Vec::with_capacity(interval_count(m, levels) as usize);
    out.push(Interval::flat(scale_log2, m));
    for k in 1..=levels {
        let slots = 1u64 << ((m / 2) as u64 * (k - 1) as u64);
        for mu in 1..=slots {
            out.push(Interval::curved(k, mu, scale_log2, m));
        }
    }
    Ok(out)
}

/// Per-coordinate kind of a cap-family axis.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum AxisKind {
    /// R^{-1/2}-cube grid (nondegenerate-phase coordinate).
    CubeGrid,
    /// Anisotropic interval ladder (monomial coordinate).
    Ladder,
}

/// Product-structured cap family: one interval list per ξ-coordinate.
///
/// The family is the Cartesian product of its per-coordinate lists; caps are
/// materialized lazily in lexicographic order.
#[derive(Clone, Debug)]
pub struct CapFamily {
    per_coord: Vec<Vec<Interval>>,
    scale_log2: u32,
    surface_id: SurfaceId,
}

impl CapFamily {
    pub fn scale_log2(&self) -> u32 {
        self.scale_log2
    }

    pub fn surface_id(&self) -> SurfaceId {
        self.surface_id
    }

    pub fn dim(&self) -> usize {
        self.per_coord.len()
    }

    pub fn coordinate_family(&self, j: usize) -> &[Interval] {
        &self.per_coord[j]
    }

    /// Exact member count (product of per-coordinate counts).
    pub fn len(&self) -> u128 {
        self.per_coord
            .iter()
            .fold(1u128, |acc, f| acc * f.len() as u128)
    }

    pub fn is_empty(&self) -> bool {
        self.per_coord.iter().any(|f| f.is_empty())
    }

    /// Lexicographic iteration over the product (last coordinate fastest).
    pub fn iter(&self) -> CapFamilyIter<'_> {
        CapFamilyIter {
            family: self,
            idx: vec![0; self.per_coord.len()],
            done: self.is_empty(),
        }
    }

    pub fn to_vec(&self) -> Vec<Cap> {
        self.iter().collect()
    }

    /// Sub-family of caps whose closure lies inside `parent` (closed-in-closed
    /// per coordinate). For a product parent this is again a product family.
    pub fn restrict(&self, parent: &DyadicBox) -> CapFamily {
        debug_assert_eq!(parent.dim(), self.dim());
        let per_coord = self
            .per_coord
            .iter()
            .zip(parent.bounds())
            .map(|(family, (lo, hi))| {
                family
                    .iter()
                    .filter(|iv| lo <= iv.lo() && iv.hi() <= hi)
                    .cloned()
                    .collect()
            })
            .collect();
        CapFamily {
            per_coord,
            scale_log2: self.scale_log2,
            surface_id: self.surface_id,
        }
    }

    /// Exact cover verification through the product structure: each
    /// per-coordinate list must tile its side of `domain` exactly, which is
    /// equivalent to the product tiling the box. Runs in time linear in the
    /// per-coordinate counts, never in the product size.
    pub fn verify_product_cover(&self, domain: &DyadicBox) -> CoverReport {
        if self.dim() != domain.dim() {
            return CoverReport::failed_message("dimension mismatch".into());
        }
        let mut total = DyadicRational::one();
        for (j, family) in self.per_coord.iter().enumerate() {
            let (dlo, dhi) = &domain.bounds()[j];
            let mut sorted: Vec<&Interval> = family.iter().collect();
            sorted.sort_by(|a, b| a.lo().cmp(b.lo()));
            if sorted.is_empty() {
                return CoverReport::failed_message(format!("coordinate {j}: empty family"));
            }
            if sorted[0].lo() != dlo || sorted.last().unwrap().hi() != dhi {
                return CoverReport::failed_message(format!(
                    "coordinate {j}: family does not span the domain side"
                ));
            }
            for w in sorted.windows(2) {
                if w[0].hi() != w[1].lo() {
                    return CoverReport::failed_message(format!(
                        "coordinate {j}: gap or overlap at {}",
                        w[0].hi()
                    ));
                }
            }
            let mut side = DyadicRational::zero();
            for iv in family {
                side = side.add_exact(&iv.length());
            }
            total = total.mul_exact(&side);
        }
        CoverReport {
            pass: total == domain.volume(),
            cap_count: self.len(),
            total_volume: total,
            domain_volume: domain.volume(),
            overlapping_pair: None,
            message: String::new(),
        }
    }
}

pub struct CapFamilyIter<'a> {
    family: &'a CapFamily,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for CapFamilyIter<'_> {
    type Item = Cap;

    fn next(&mut self) -> Option<Cap> {
        if self.done {
            return None;
        }
        let coords: Vec<Interval> = self
            .idx
            .iter()
            .zip(&self.family.per_coord)
            .map(|(&i, f)| f[i].clone())
            .collect();
        // odometer advance, last coordinate fastest
        let mut j = self.idx.len();
        loop {
            if j == 0 {
                self.done = true;
                break;
            }
            j -= 1;
            self.idx[j] += 1;
            if self.idx[j] < self.family.per_coord[j].len() {
                break;
            }
            self.idx[j] = 0;
        }
        Some(Cap::new(coords, self.family.scale_log2, self.family.surface_id))
    }
}

fn axis_kinds(s: usize, n: usize) -> Vec<AxisKind> {
    let mut kinds = vec![AxisKind::CubeGrid; s];
    kinds.resize(n - 1, AxisKind::Ladder);
    kinds
}

fn family_for_kinds(
    scale_log2: u32,
    m: u32,
    kinds: &[AxisKind],
    surface_id: SurfaceId,
) -> Result<CapFamily> {
    levels_for_scale(scale_log2, m)?;
    let ladder = interval_family(scale_log2, m)?;
    let cube_grid: Vec<Interval> = if kinds.contains(&AxisKind::CubeGrid) {
        debug_assert_eq!(scale_log2 % 2, 0, "m even makes every scale square");
        let count = 1u64 << (scale_log2 / 2);
        (0..count).map(|i| Interval::cube(i, scale_log2)).collect()
    } else {
        Vec::new()
    };
    let per_coord = kinds
        .iter()
        .map(|k| match k {
            AxisKind::CubeGrid => cube_grid.clone(),
            AxisKind::Ladder => ladder.clone(),
        })
        .collect();
    Ok(CapFamily {
        per_coord,
        scale_log2,
        surface_id,
    })
}

/// The cap family at scale R = 2^(scale_log2) for s nondegenerate-phase
/// coordinates in ambient dimension n: products of R^{-1/2}-cubes in the
/// first s coordinates with ladder intervals in the remaining n-1-s.
pub fn cap_family(scale_log2: u32, m: u32, s: usize, n: usize) -> Result<CapFamily> {
    if n < 2 || s > n - 1 {
        return Err(Error::Config(format!(
            "cap_family requires n >= 2 and 0 <= s <= n-1 (got n={n}, s={s})"
        )));
    }
    family_for_kinds(scale_log2, m, &axis_kinds(s, n), SurfaceId(0))
}

/// Cap family adapted to a surface: cube grids on its nondegenerate-phase
/// coordinates (wherever they sit), ladders on its monomial coordinates.
pub fn cap_family_for_surface(surface: &SurfaceSpec, scale_log2: u32) -> Result<CapFamily> {
    let kinds: Vec<AxisKind> = surface
        .coords()
        .iter()
        .map(|c| match c {
            CoordPhase::Nondegenerate(_) => AxisKind::CubeGrid,
            CoordPhase::Monomial => AxisKind::Ladder,
        })
        .collect();
    family_for_kinds(scale_log2, surface.m(), &kinds, surface.id())
}

/// Region label b = (b_{s+1}, …, b_{n-1}) with b_j ∈ {0,1}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RegionLabel(pub Vec<u8>);

impl RegionLabel {
    pub fn all_ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// The 2^{n-1-s} regions Ω_b = [0,1]^s × ∏ J_{b_j} with J_0 = [0, K^{-1/m}]
/// and J_1 = [K^{-1/m}, 1], partitioning [0,1]^{n-1} up to boundaries.
/// Labels are enumerated lexicographically starting from (0,…,0).
pub fn omega_regions(
    k_log2: u32,
    m: u32,
    s: usize,
    n: usize,
) -> Result<Vec<(RegionLabel, DyadicBox)>> {
    if n < 2 || s > n - 1 {
        return Err(Error::Config(format!(
            "omega_regions requires n >= 2 and 0 <= s <= n-1 (got n={n}, s={s})"
        )));
    }
    let sprime = levels_for_scale(k_log2, m)?;
    let split = DyadicRational::pow2(-(sprime as i64)); // K^{-1/m}
    let free = n - 1 - s;
    let mut out = Vec::with_capacity(1 << free);
    for code in 0..(1u64 << free) {
        let bits: Vec<u8> = (0..free)
            .map(|j| ((code >> (free - 1 - j)) & 1) as u8)
            .collect();
        let mut bounds: Vec<(DyadicRational, DyadicRational)> = (0..s)
            .map(|_| (DyadicRational::zero(), DyadicRational::one()))
            .collect();
        for &b in &bits {
            bounds.push(if b == 0 {
                (DyadicRational::zero(), split.clone())
            } else {
                (split.clone(), DyadicRational::one())
            });
        }
        out.push((RegionLabel(bits), DyadicBox::new(bounds)));
    }
    Ok(out)
}

/// Cap of the coarse family at scale K whose non-cube coordinates carry
/// (λ, ι) labels: the curved coordinate with level k and slot ι is exactly
/// `[λ + (ι-1) λ^{-(m-2)/2} K^{-1/2}, λ + ι λ^{-(m-2)/2} K^{-1/2}]` with
/// λ = 2^{k-1} K^{-1/m}.
#[derive(Clone, Debug)]
pub struct CoarseCap {
    cap: Cap,
    m: u32,
}

impl CoarseCap {
    pub fn from_cap(cap: Cap, m: u32) -> Self {
        Self { cap, m }
    }

    pub fn cap(&self) -> &Cap {
        &self.cap
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn k_log2(&self) -> u32 {
        self.cap.scale_log2()
    }

    /// (λ, ι) of coordinate j when it is curved.
    pub fn lambda_iota(&self, j: usize) -> Option<(DyadicRational, u64)> {
        match self.cap.coords()[j].role() {
            Role::Curved { level, slot } => {
                let sprime = (self.cap.scale_log2() / self.m) as i64;
                Some((DyadicRational::pow2(level as i64 - 1 - sprime), slot))
            }
            _ => None,
        }
    }

    /// Region label over the ladder coordinates (1 for curved, 0 for flat).
    pub fn region_label(&self) -> RegionLabel {
        RegionLabel(
            self.cap
                .coords()
                .iter()
                .filter_map(|iv| match iv.role() {
                    Role::Cube => None,
                    Role::Flat => Some(0),
                    Role::Curved { .. } => Some(1),
                })
                .collect(),
        )
    }

    pub fn bounds(&self) -> DyadicBox {
        self.cap.bounds()
    }
}

/// Coarse caps covering Ω_{(1,…,1)}: products of K^{-1/2}-cubes with curved
/// pieces J_{λ,ι} over every ladder coordinate, λ dyadic in [K^{-1/m}, 1/2],
/// 1 ≤ ι ≤ λ^{m/2} K^{1/2}.
pub fn coarse_caps(k_log2: u32, m: u32, s: usize, n: usize) -> Result<Vec<CoarseCap>> {
    let family = cap_family(k_log2, m, s, n)?;
    let curved_only: Vec<Vec<Interval>> = family
        .per_coord
        .iter()
        .map(|f| {
            f.iter()
                .filter(|iv| iv.role().is_curved() || iv.role().is_cube())
                .cloned()
                .collect()
        })
        .collect();
    let restricted = CapFamily {
        per_coord: curved_only,
        scale_log2: k_log2,
        surface_id: family.surface_id,
    };
    Ok(restricted
        .iter()
        .map(|cap| CoarseCap::from_cap(cap, m))
        .collect())
}

/// The full coarse family at scale K: one cap per member of the cap family,
/// covering every region Ω_b (flat coordinates keep the whole block J_0).
pub fn coarse_caps_all_regions(k_log2: u32, m: u32, s: usize, n: usize) -> Result<Vec<CoarseCap>> {
    Ok(cap_family(k_log2, m, s, n)?
        .iter()
        .map(|cap| CoarseCap::from_cap(cap, m))
        .collect())
}

/// Members of `family` whose closure lies in the closed parent box. When the
/// parents partition the domain, every family member is selected by exactly
/// one parent (left-closed convention resolves boundary ties through the
/// closed-in-closed test).
pub fn caps_in(parent: &DyadicBox, family: &[Cap]) -> Vec<Cap> {
    family
        .iter()
        .filter(|cap| parent.contains_cap(cap))
        .cloned()
        .collect()
}

/// Report of an exact cover verification.
#[derive(Clone, Debug)]
pub struct CoverReport {
    pub pass: bool,
    pub cap_count: u128,
    pub total_volume: DyadicRational,
    pub domain_volume: DyadicRational,
    /// Indices (into the input list) of a pair with overlapping interiors.
    pub overlapping_pair: Option<(usize, usize)>,
    pub message: String,
}

impl CoverReport {
    fn failed_message(message: String) -> Self {
        CoverReport {
            pass: false,
            cap_count: 0,
            total_volume: DyadicRational::zero(),
            domain_volume: DyadicRational::zero(),
            overlapping_pair: None,
            message,
        }
    }

    /// Missing volume when the family undershoots the domain.
    pub fn volume_deficit(&self) -> Option<DyadicRational> {
        self.domain_volume
            .checked_sub(&self.total_volume)
            .filter(|d| !d.is_zero())
    }
}

/// Exact cover check for an explicit cap list: Σ volumes must equal the
/// domain volume and interiors must be pairwise disjoint. Overlaps are found
/// by recursive refinement on the coordinate structure, so valid partitions
/// verify in near-linear time.
pub fn verify_cover(family: &[Cap], domain: &DyadicBox) -> CoverReport {
    let mut total = DyadicRational::zero();
    for cap in family {
        total = total.add_exact(&cap.volume());
    }
    let overlapping_pair = find_overlap(family, &(0..family.len()).collect::<Vec<_>>(), 0);
    let volumes_match = total == domain.volume();
    let mut message = String::new();
    if !volumes_match {
        message = format!(
            "volume mismatch: family {} vs domain {}",
            total,
            domain.volume()
        );
    }
    if let Some((i, j)) = overlapping_pair {
        message = format!("caps {i} and {j} have overlapping interiors");
    }
    CoverReport {
        pass: volumes_match && overlapping_pair.is_none(),
        cap_count: family.len() as u128,
        total_volume: total,
        domain_volume: domain.volume(),
        overlapping_pair,
        message,
    }
}

fn find_overlap(family: &[Cap], subset: &[usize], coord: usize) -> Option<(usize, usize)> {
    if subset.len() < 2 {
        return None;
    }
    let dim = family[subset[0]].dim();
    if coord >= dim {
        // identical caps all the way down
        return Some((subset[0], subset[1]));
    }
    // group by exact first-interval endpoints
    let mut groups: HashMap<(DyadicRational, DyadicRational), Vec<usize>> = HashMap::new();
    for &i in subset {
        let iv = &family[i].coords()[coord];
        groups
            .entry((iv.lo().clone(), iv.hi().clone()))
            .or_default()
            .push(i);
    }
    let keys: Vec<&(DyadicRational, DyadicRational)> = groups.keys().collect();
    // distinct but interior-overlapping keys: inspect the two groups directly
    for (a, ka) in keys.iter().enumerate() {
        for kb in keys.iter().skip(a + 1) {
            if ka.0 < kb.1 && kb.0 < ka.1 {
                for &i in &groups[*ka] {
                    for &j in &groups[*kb] {
                        if caps_interiors_overlap_from(&family[i], &family[j], coord + 1) {
                            return Some((i.min(j), i.max(j)));
                        }
                    }
                }
            }
        }
    }
    for members in groups.values() {
        if let Some(pair) = find_overlap(family, members, coord + 1) {
            return Some(pair);
        }
    }
    None
}

fn caps_interiors_overlap_from(a: &Cap, b: &Cap, from: usize) -> bool {
    a.coords()
        .iter()
        .zip(b.coords())
        .skip(from)
        .all(|(x, y)| x.interiors_overlap(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;

    fn dy(m: u64, e: i64) -> DyadicRational {
        DyadicRational::new(BigUint::from(m), e)
    }

    #[test]
    fn one_level_family_splits_at_one_half() {
        let f = interval_family(4, 4).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0].lo(), &DyadicRational::zero());
        assert_eq!(f[0].hi(), &dy(1, -1));
        assert_eq!(f[1].lo(), &dy(1, -1));
        assert_eq!(f[1].hi(), &DyadicRational::one());
    }

    #[test]
    fn two_level_family_matches_hand_enumeration() {
        let f = interval_family(8, 4).unwrap();
        let ends: Vec<(f64, f64)> = f
            .iter()
            .map(|iv| (iv.lo().to_f64_lossy(), iv.hi().to_f64_lossy()))
            .collect();
        assert_eq!(
            ends,
            vec![
                (0.0, 0.25),
                (0.25, 0.5),
                (0.5, 0.625),
                (0.625, 0.75),
                (0.75, 0.875),
                (0.875, 1.0)
            ]
        );
    }

    #[test]
    fn three_level_family_has_twenty_two_intervals() {
        let f = interval_family(12, 4).unwrap();
        assert_eq!(f.len(), 22);
        assert_eq!(interval_count(4, 3), 22);
    }

    #[test]
    fn non_conforming_scale_is_rejected() {
        assert!(matches!(
            interval_family(3, 4),
            Err(Error::InvalidScale { .. })
        ));
        assert!(interval_family(0, 4).is_err());
        assert!(interval_family(10, 4).is_err());
    }

    #[test]
    fn interval_family_tiles_the_unit_interval_exactly() {
        for (log2, m) in [(4u32, 4u32), (8, 4), (12, 4), (6, 6), (12, 6), (18, 6)] {
            let f = interval_family(log2, m).unwrap();
            let mut total = DyadicRational::zero();
            for iv in &f {
                total = total.add_exact(&iv.length());
            }
            assert!(total.is_one(), "R=2^{log2} m={m}");
            for w in f.windows(2) {
                assert_eq!(w[0].hi(), w[1].lo());
            }
        }
    }

    #[test]
    fn monomial_family_in_three_dimensions_has_36_caps() {
        let fam = cap_family(8, 4, 0, 3).unwrap();
        assert_eq!(fam.len(), 36);
        let report = fam.verify_product_cover(&DyadicBox::unit(2));
        assert!(report.pass, "{}", report.message);
        assert!(report.total_volume.is_one());
    }

    #[test]
    fn mixed_family_with_one_cube_coordinate_has_96_caps() {
        let fam = cap_family(8, 4, 1, 3).unwrap();
        assert_eq!(fam.len(), 96);
        assert!(fam.verify_product_cover(&DyadicBox::unit(2)).pass);
    }

    #[test]
    fn one_dimensional_family_equals_the_interval_family() {
        let fam = cap_family(4, 4, 0, 2).unwrap();
        assert_eq!(fam.len(), 2);
        let caps = fam.to_vec();
        assert_eq!(caps[0].coords()[0], interval_family(4, 4).unwrap()[0]);
    }

    #[test]
    fn flat_verify_cover_passes_on_the_36_cap_family() {
        let caps = cap_family(8, 4, 0, 3).unwrap().to_vec();
        let report = verify_cover(&caps, &DyadicBox::unit(2));
        assert!(report.pass, "{}", report.message);
    }

    #[test]
    fn removing_a_cap_reports_the_exact_volume_deficit() {
        let caps: Vec<Cap> = cap_family(8, 4, 0, 3)
            .unwrap()
            .iter()
            .filter(|c| {
                !(c.coords()[0].lo() == &dy(1, -1)
                    && c.coords()[0].hi() == &dy(5, -3)
                    && c.coords()[1].lo() == &DyadicRational::zero()
                    && c.coords()[1].hi() == &dy(1, -2))
            })
            .collect();
        assert_eq!(caps.len(), 35);
        let report = verify_cover(&caps, &DyadicBox::unit(2));
        assert!(!report.pass);
        assert_eq!(report.volume_deficit().unwrap(), dy(1, -5));
        assert!(report.overlapping_pair.is_none());
    }

    #[test]
    fn duplicating_a_cap_reports_an_overlapping_pair() {
        let mut caps = cap_family(8, 4, 0, 3).unwrap().to_vec();
        caps.push(caps[7].clone());
        let report = verify_cover(&caps, &DyadicBox::unit(2));
        assert!(!report.pass);
        let (i, j) = report.overlapping_pair.unwrap();
        assert!(caps_interiors_overlap_from(&caps[i], &caps[j], 0));
    }

    #[test]
    fn omega_regions_split_at_the_coarse_flat_width() {
        let regions = omega_regions(4, 4, 0, 3).unwrap();
        assert_eq!(regions.len(), 4);
        // all four sign patterns, J0 = [0,1/2]
        let (label, bx) = &regions[0];
        assert_eq!(label.bits(), &[0, 0]);
        assert_eq!(bx.bounds()[0].1, dy(1, -1));
        let (label, bx) = &regions[3];
        assert_eq!(label.bits(), &[1, 1]);
        assert_eq!(bx.bounds()[0].0, dy(1, -1));

        let r2 = omega_regions(8, 4, 0, 2).unwrap();
        assert_eq!(r2.len(), 2);
        assert_eq!(r2[0].1.bounds()[0].1, dy(1, -2));
    }

    #[test]
    fn fully_cubical_surface_has_a_single_region() {
        let regions = omega_regions(8, 4, 1, 2).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].0.bits().len(), 0);
        assert_eq!(regions[0].1, DyadicBox::unit(1));
    }

    #[test]
    fn coarse_caps_at_the_smallest_scale_is_the_top_block() {
        let caps = coarse_caps(4, 4, 0, 2).unwrap();
        assert_eq!(caps.len(), 1);
        let c = &caps[0];
        assert_eq!(c.cap().coords()[0].lo(), &dy(1, -1));
        assert_eq!(c.cap().coords()[0].hi(), &DyadicRational::one());
        let (lambda, iota) = c.lambda_iota(0).unwrap();
        assert_eq!(lambda, dy(1, -1));
        assert_eq!(iota, 1);
    }

    #[test]
    fn coarse_caps_match_the_curved_ladder_pieces() {
        let caps = coarse_caps(8, 4, 0, 2).unwrap();
        assert_eq!(caps.len(), 5);
        let ladder: Vec<Interval> = interval_family(8, 4)
            .unwrap()
            .into_iter()
            .filter(|iv| iv.role().is_curved())
            .collect();
        for (c, iv) in caps.iter().zip(&ladder) {
            assert_eq!(&c.cap().coords()[0], iv);
        }
        // J_{λ,ι} endpoint formula: λ + ι λ^{-(m-2)/2} K^{-1/2}
        for c in &caps {
            let (lambda, iota) = c.lambda_iota(0).unwrap();
            let len = c.cap().coords()[0].length();
            let expect_lo = lambda.add_exact(
                &len.mul_exact(&DyadicRational::from_u64(iota - 1)),
            );
            assert_eq!(c.cap().coords()[0].lo(), &expect_lo);
        }
    }

    #[test]
    fn coarse_caps_in_two_ladder_coordinates_form_products() {
        let caps = coarse_caps(8, 4, 0, 3).unwrap();
        assert_eq!(caps.len(), 25);
        let cover: Vec<Cap> = caps.iter().map(|c| c.cap().clone()).collect();
        // they exactly cover Ω_{(1,…,1)} = [1/4,1]^2
        let domain = DyadicBox::new(vec![
            (dy(1, -2), DyadicRational::one()),
            (dy(1, -2), DyadicRational::one()),
        ]);
        let report = verify_cover(&cover, &domain);
        assert!(report.pass, "{}", report.message);
    }

    #[test]
    fn caps_in_selects_by_closed_containment() {
        let fam = cap_family(8, 4, 0, 2).unwrap().to_vec();
        let parent = DyadicBox::new(vec![(dy(1, -1), DyadicRational::one())]);
        let inside = caps_in(&parent, &fam);
        assert_eq!(inside.len(), 4);
        assert!(inside.iter().all(|c| c.coords()[0].lo() >= &dy(1, -1)));

        let all = caps_in(&DyadicBox::unit(1), &fam);
        assert_eq!(all.len(), fam.len());

        let small = DyadicBox::new(vec![(DyadicRational::zero(), dy(1, -2))]);
        let flat_only = caps_in(&small, &fam);
        assert_eq!(flat_only.len(), 1);
        assert!(flat_only[0].coords()[0].role().is_flat());
    }

    #[test]
    fn every_fine_cap_lands_in_exactly_one_coarse_parent() {
        let fine = cap_family(8, 4, 0, 3).unwrap().to_vec();
        let parents = coarse_caps_all_regions(4, 4, 0, 3).unwrap();
        for cap in &fine {
            let owners = parents
                .iter()
                .filter(|p| p.bounds().contains_cap(cap))
                .count();
            assert_eq!(owners, 1, "cap {:?}", cap.bounds());
        }
    }

    #[test]
    fn nesting_respects_scale_quotients() {
        // R = K * 2^{mj}: every fine cap sits inside exactly one coarse cap
        for (m, k_log2, r_log2, s, n) in [(4u32, 4u32, 8u32, 0usize, 2usize), (4, 4, 12, 1, 3)] {
            let fine = cap_family(r_log2, m, s, n).unwrap();
            let coarse = cap_family(k_log2, m, s, n).unwrap().to_vec();
            for cap in fine.iter() {
                let owners = coarse
                    .iter()
                    .filter(|p| p.bounds().contains_cap(&cap))
                    .count();
                assert_eq!(owners, 1);
            }
        }
    }

    #[test]
    fn restrict_matches_elementwise_filtering() {
        let fam = cap_family(8, 4, 0, 3).unwrap();
        let parent = DyadicBox::new(vec![
            (dy(1, -1), DyadicRational::one()),
            (DyadicRational::zero(), dy(1, -1)),
        ]);
        let fast: Vec<Cap> = fam.restrict(&parent).to_vec();
        let slow = caps_in(&parent, &fam.to_vec());
        assert_eq!(fast, slow);
    }

    #[test]
    fn product_and_flat_verification_agree_on_small_families() {
        for (log2, m, s, n) in [(4u32, 4u32, 0usize, 2usize), (8, 4, 1, 3), (6, 6, 0, 3)] {
            let fam = cap_family(log2, m, s, n).unwrap();
            let domain = DyadicBox::unit(n - 1);
            let a = fam.verify_product_cover(&domain);
            let b = verify_cover(&fam.to_vec(), &domain);
            assert_eq!(a.pass, b.pass);
            assert_eq!(a.total_volume, b.total_volume);
            assert_eq!(a.cap_count, b.cap_count);
        }
    }
}
