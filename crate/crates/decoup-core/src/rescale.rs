//! Affine change of variables attached to a coarse cap, the rescaled surface
//! and caps, the image box of a ball, and the exact membership check for
//! rescaled fine caps.
//!
//! All ξ-side offsets and scales are dyadic (scales are pure powers of two),
//! so cap images are computed exactly. The x-side map is kept implicit as
//! per-coordinate scales plus a shear against the last coordinate.

use crate::dyadic::DyadicRational;
use crate::geometry::{Cap, DyadicBox, Interval, RealBox, Role};
use crate::partition::{cap_family_for_surface, CapFamily, CoarseCap};
use crate::scalar::Scalar;
use crate::surface::{CoordPhase, PhaseSpec, Poly, SurfaceSpec};
use crate::{Error, Result};

/// Per-coordinate piece of the ξ-map ξ_j = offset_j + 2^{scale_log2_j} η_j.
#[derive(Clone, Debug)]
pub struct CoordChange {
    offset: DyadicRational,
    scale_log2: i64,
}

impl CoordChange {
    pub fn offset(&self) -> &DyadicRational {
        &self.offset
    }

    /// log2 of the (power-of-two) scale factor.
    pub fn scale_log2(&self) -> i64 {
        self.scale_log2
    }

    pub fn scale_f64(&self) -> f64 {
        2f64.powi(self.scale_log2 as i32)
    }

    /// Exact forward image ξ = offset + scale·η for dyadic η.
    pub fn forward(&self, eta: &DyadicRational) -> DyadicRational {
        self.offset.add_exact(&eta.mul_pow2(self.scale_log2))
    }

    /// Exact inverse image η = (ξ − offset)/scale; `None` if ξ < offset.
    pub fn inverse(&self, xi: &DyadicRational) -> Option<DyadicRational> {
        Some(xi.checked_sub(&self.offset)?.mul_pow2(-self.scale_log2))
    }
}

/// The change of variables associated with a cap τ at scale K: a bijection
/// of [0,1]^{n-1} onto τ together with the rescaled surface and the implicit
/// x-side linear map.
#[derive(Clone, Debug)]
pub struct AffineChange {
    coords: Vec<CoordChange>,
    /// log2 of the x_n-normalization factor K.
    xn_norm_log2: u32,
    tau_bounds: DyadicBox,
    source: SurfaceSpec,
    rescaled: SurfaceSpec,
    /// Shear coefficients b_j = φ_j'(offset_j): the x-side image is
    /// ỹ_j = scale_j (x_j + b_j x_n), ỹ_n = x_n / K.
    shear: Vec<f64>,
    /// φ_j(offset_j), the constant terms of the subtracted affine phase.
    phase_offsets: Vec<f64>,
}

impl AffineChange {
    pub fn coords(&self) -> &[CoordChange] {
        &self.coords
    }

    pub fn xn_norm_log2(&self) -> u32 {
        self.xn_norm_log2
    }

    pub fn xn_normalization(&self) -> f64 {
        2f64.powi(self.xn_norm_log2 as i32)
    }

    pub fn tau_bounds(&self) -> &DyadicBox {
        &self.tau_bounds
    }

    pub fn source_surface(&self) -> &SurfaceSpec {
        &self.source
    }

    pub fn rescaled_surface(&self) -> &SurfaceSpec {
        &self.rescaled
    }

    pub fn shear(&self) -> &[f64] {
        &self.shear
    }

    pub fn phase_offsets(&self) -> &[f64] {
        &self.phase_offsets
    }

    /// Forward ξ-map on floating-point points.
    pub fn map_xi<S: Scalar>(&self, eta: &[S]) -> Vec<S> {
        eta.iter()
            .zip(&self.coords)
            .map(|(&e, c)| S::from_f64c(c.offset.to_f64_lossy()) + S::from_f64c(c.scale_f64()) * e)
            .collect()
    }

    /// x-side image ỹ = (scale_j (x_j + b_j x_n), x_n/K) of a point x ∈ ℝ^n.
    pub fn x_image<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = x.len();
        let xn = x[n - 1];
        let mut out: Vec<S> = self
            .coords
            .iter()
            .zip(&self.shear)
            .zip(&x[..n - 1])
            .map(|((c, &b), &xj)| S::from_f64c(c.scale_f64()) * (xj + S::from_f64c(b) * xn))
            .collect();
        out.push(xn / S::from_f64c(self.xn_normalization()));
        out
    }

    /// log2 of |det| of the ξ-map (product of coordinate scales).
    pub fn det_xi_log2(&self) -> i64 {
        self.coords.iter().map(|c| c.scale_log2).sum()
    }

    /// log2 of |det| of the x-side map (∏ scale_j) / K.
    pub fn det_x_log2(&self) -> i64 {
        self.det_xi_log2() - self.xn_norm_log2 as i64
    }
}

fn role_kind_compatible(role: Role, phase: &CoordPhase) -> bool {
    match (role, phase) {
        (Role::Cube, CoordPhase::Nondegenerate(_)) => true,
        (Role::Flat | Role::Curved { .. }, CoordPhase::Monomial) => true,
        _ => false,
    }
}

/// Builds the change of variables for a cap of the coarse family of
/// `surface`. Cube coordinates map with scale K^{-1/2} from the cube corner,
/// curved coordinates with scale λ^{-(m-2)/2} K^{-1/2} from the left
/// endpoint, flat coordinates with scale K^{-1/m} from zero.
pub fn affine_for_cap(tau: &CoarseCap, surface: &SurfaceSpec) -> Result<AffineChange> {
    let cap = tau.cap();
    let n = surface.n();
    let m = surface.m();
    if cap.dim() != n - 1 {
        return Err(Error::DimensionMismatch {
            context: "affine_for_cap",
            expected: n - 1,
            got: cap.dim(),
        });
    }
    if tau.m() != m {
        return Err(Error::CapSurfaceMismatch {
            context: format!("cap built for m={}, surface has m={}", tau.m(), m),
        });
    }
    let k_log2 = cap.scale_log2();
    if k_log2 % m != 0 {
        return Err(Error::InvalidScale {
            got: format!("2^{k_log2}"),
            m,
        });
    }
    let sprime = (k_log2 / m) as i64;
    let unit = k_log2 == 0;
    let mut coords = Vec::with_capacity(n - 1);
    let mut shear = Vec::with_capacity(n - 1);
    let mut phase_offsets = Vec::with_capacity(n - 1);
    let mut new_phases = Vec::with_capacity(n - 1);
    for (j, iv) in cap.coords().iter().enumerate() {
        let phase = &surface.coords()[j];
        if !unit && !role_kind_compatible(iv.role(), phase) {
            return Err(Error::CapSurfaceMismatch {
                context: format!(
                    "coordinate {j}: cap role {:?} incompatible with surface coordinate",
                    iv.role()
                ),
            });
        }
        if unit
            && (!iv.lo().is_zero() || !iv.hi().is_one())
        {
            return Err(Error::CapSurfaceMismatch {
                context: "scale-1 rescaling requires the unit cap".into(),
            });
        }
        let change = match iv.role() {
            _ if unit => CoordChange {
                offset: DyadicRational::zero(),
                scale_log2: 0,
            },
            Role::Cube => CoordChange {
                offset: iv.lo().clone(),
                scale_log2: -(k_log2 as i64) / 2,
            },
            Role::Curved { level, .. } => {
                // λ = 2^{level-1-s'}; scale = λ^{-(m-2)/2} K^{-1/2}
                let lambda_log2 = level as i64 - 1 - sprime;
                CoordChange {
                    offset: iv.lo().clone(),
                    scale_log2: -lambda_log2 * ((m - 2) / 2) as i64 - (k_log2 as i64) / 2,
                }
            }
            Role::Flat => {
                if !iv.lo().is_zero() {
                    return Err(Error::CapSurfaceMismatch {
                        context: format!("coordinate {j}: flat block must start at 0"),
                    });
                }
                CoordChange {
                    offset: DyadicRational::zero(),
                    scale_log2: -sprime,
                }
            }
        };
        let poly = surface.coord_poly(j);
        let offset_f = change.offset.to_f64_lossy();
        shear.push(poly.derivative().eval(offset_f));
        phase_offsets.push(poly.eval(offset_f));

        // rescaled phase ψ(η) = K [φ(o + S η) − φ(o) − φ'(o) S η]
        let keep_monomial = matches!(iv.role(), Role::Flat) || (unit && phase == &CoordPhase::Monomial);
        if keep_monomial {
            // K ((K^{-1/m} η)^m) = η^m exactly
            new_phases.push(CoordPhase::Monomial);
        } else {
            let substituted = poly.affine_substitute(offset_f, change.scale_f64());
            let mut coeffs = substituted.coeffs().to_vec();
            coeffs[0] = 0.0;
            if coeffs.len() > 1 {
                coeffs[1] = 0.0;
            }
            let psi = Poly::new(coeffs).scale(2f64.powi(k_log2 as i32));
            let c = (0..=m)
                .map(|l| psi.derivative_n(l).extrema_on(0.0, 1.0).1)
                .fold(0.0f64, f64::max);
            new_phases.push(CoordPhase::Nondegenerate(PhaseSpec::new(
                psi.coeffs().to_vec(),
                c,
            )));
        }
        coords.push(change);
    }
    let rescaled = SurfaceSpec::from_coords(n, m, new_phases)?;
    Ok(AffineChange {
        coords,
        xn_norm_log2: k_log2,
        tau_bounds: cap.bounds(),
        source: surface.clone(),
        rescaled,
        shear,
        phase_offsets,
    })
}

/// The rescaled surface produced by the change of variables of τ.
pub fn rescale_surface(tau: &CoarseCap, surface: &SurfaceSpec) -> Result<SurfaceSpec> {
    Ok(affine_for_cap(tau, surface)?.rescaled.clone())
}

/// Exact image of a fine cap θ ⊆ τ under the inverse ξ-map. Image intervals
/// that coincide exactly with a member of the rescaled cap family inherit its
/// role; others keep their original role tag.
pub fn rescale_cap(theta: &Cap, change: &AffineChange) -> Result<Cap> {
    if !change.tau_bounds.contains_cap(theta) {
        return Err(Error::CapNotInParent {
            context: format!("theta {:?}", theta.bounds()),
        });
    }
    let new_scale = theta.scale_log2() - change.xn_norm_log2;
    let lookup = rescaled_lookup(change, new_scale).ok();
    let mut coords = Vec::with_capacity(theta.dim());
    for (j, iv) in theta.coords().iter().enumerate() {
        let c = &change.coords[j];
        let lo = c
            .inverse(iv.lo())
            .expect("containment checked above");
        let hi = c.inverse(iv.hi()).expect("containment checked above");
        let matched = lookup
            .as_ref()
            .and_then(|fams| exact_member(&fams[j], &lo, &hi));
        coords.push(match matched {
            Some(member) => member,
            None => Interval::new(lo, hi, iv.role())?,
        });
    }
    Ok(Cap::new(coords, new_scale, change.rescaled.id()))
}

fn rescaled_lookup(change: &AffineChange, scale_log2: u32) -> Result<Vec<Vec<Interval>>> {
    let fam = cap_family_for_surface(&change.rescaled, scale_log2)?;
    Ok((0..fam.dim())
        .map(|j| fam.coordinate_family(j).to_vec())
        .collect())
}

fn exact_member(family: &[Interval], lo: &DyadicRational, hi: &DyadicRational) -> Option<Interval> {
    family
        .iter()
        .find(|iv| iv.lo() == lo && iv.hi() == hi)
        .cloned()
}

/// One failed membership instance.
#[derive(Clone, Debug)]
pub struct MembershipException {
    pub theta: DyadicBox,
    pub image: DyadicBox,
    /// Coordinates whose image interval is not a family member.
    pub bad_coords: Vec<usize>,
}

/// Report of a membership sweep over one coarse cap.
#[derive(Clone, Debug)]
pub struct MembershipReport {
    pub pass: bool,
    pub checked: usize,
    pub exceptions: Vec<MembershipException>,
    /// Verified instances of the dyadic relation λ̃ = K^{1/m} λ.
    pub lambda_relations_checked: usize,
}

/// Verifies that rescaling maps every fine cap θ ⊆ τ at scale R onto a
/// member of the cap family at scale R/K for the rescaled surface, by exact
/// endpoint comparison. Also checks the dyadic relation λ̃ = K^{1/m} λ for
/// every curved coordinate that survives rescaling.
pub fn verify_membership_claim(
    tau: &CoarseCap,
    fine: &CapFamily,
    surface: &SurfaceSpec,
) -> Result<MembershipReport> {
    let r_log2 = fine.scale_log2();
    let k_log2 = tau.cap().scale_log2();
    let m = surface.m();
    if r_log2 <= k_log2 || (r_log2 - k_log2) % m != 0 {
        return Err(Error::InvalidScale {
            got: format!("R/K = 2^{}", r_log2 as i64 - k_log2 as i64),
            m,
        });
    }
    let change = affine_for_cap(tau, surface)?;
    let new_scale = r_log2 - k_log2;
    let lookup = rescaled_lookup(&change, new_scale)?;
    let inside = fine.restrict(&tau.bounds());
    let mut checked = 0usize;
    let mut lambda_relations_checked = 0usize;
    let mut exceptions = Vec::new();
    for theta in inside.iter() {
        checked += 1;
        let mut bad = Vec::new();
        let mut image_bounds = Vec::with_capacity(theta.dim());
        for (j, iv) in theta.coords().iter().enumerate() {
            let c = &change.coords[j];
            let (lo, hi) = match (c.inverse(iv.lo()), c.inverse(iv.hi())) {
                (Some(lo), Some(hi)) => (lo, hi),
                _ => {
                    bad.push(j);
                    image_bounds.push((DyadicRational::zero(), DyadicRational::one()));
                    continue;
                }
            };
            match exact_member(&lookup[j], &lo, &hi) {
                Some(member) => {
                    // λ̃ = K^{1/m} λ for ladder coordinates that stay curved
                    if let (Role::Curved { level: l_old, .. }, Role::Curved { level: l_new, .. }) =
                        (iv.role(), member.role())
                    {
                        let lambda_old =
                            DyadicRational::pow2(l_old as i64 - 1 - (r_log2 / m) as i64);
                        let lambda_new =
                            DyadicRational::pow2(l_new as i64 - 1 - (new_scale / m) as i64);
                        if lambda_new != lambda_old.mul_pow2((k_log2 / m) as i64) {
                            bad.push(j);
                        } else {
                            lambda_relations_checked += 1;
                        }
                    }
                }
                None => bad.push(j),
            }
            image_bounds.push((lo, hi));
        }
        if !bad.is_empty() {
            exceptions.push(MembershipException {
                theta: theta.bounds(),
                image: DyadicBox::new(
                    image_bounds
                        .into_iter()
                        .map(|(lo, hi)| if lo < hi { (lo, hi) } else { (DyadicRational::zero(), DyadicRational::one()) })
                        .collect(),
                ),
                bad_coords: bad,
            });
        }
    }
    Ok(MembershipReport {
        pass: exceptions.is_empty(),
        checked,
        exceptions,
        lambda_relations_checked,
    })
}

/// Image box of a ball under the dual (x-side) map: coordinate j gets
/// half-width scale_j · h_j, the last coordinate gets h_n / K; the center is
/// mapped through the x-side map.
pub fn image_box<S: Scalar>(ball: &RealBox<S>, change: &AffineChange) -> RealBox<S> {
    let n = ball.dim();
    let center = change.x_image(ball.center());
    let mut half = Vec::with_capacity(n);
    for (j, c) in change.coords.iter().enumerate() {
        half.push(S::from_f64c(c.scale_f64()) * ball.half_widths()[j]);
    }
    half.push(ball.half_widths()[n - 1] / S::from_f64c(change.xn_normalization()));
    RealBox::new(center, half).expect("scales are positive")
}

/// Like [`image_box`] but padded to cover the sheared true image of the
/// ball: coordinate j gets scale_j (h_j + |b_j| h_n). Used when a lattice
/// must cover the image of the ball exactly.
pub fn image_box_sheared<S: Scalar>(ball: &RealBox<S>, change: &AffineChange) -> RealBox<S> {
    let n = ball.dim();
    let center = change.x_image(ball.center());
    let mut half = Vec::with_capacity(n);
    for (j, c) in change.coords.iter().enumerate() {
        let b = S::from_f64c(change.shear[j].abs());
        half.push(
            S::from_f64c(c.scale_f64()) * (ball.half_widths()[j] + b * ball.half_widths()[n - 1]),
        );
    }
    half.push(ball.half_widths()[n - 1] / S::from_f64c(change.xn_normalization()));
    RealBox::new(center, half).expect("scales are positive")
}
