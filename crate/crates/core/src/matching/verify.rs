use serde::Serialize;

use crate::dyadic::{DyadicPolynomial, DyadicRational};

/// Identities checked at one ladder level.
#[derive(Clone, Debug, Serialize)]
pub struct LevelCheck {
    pub level: usize,
    pub gamma: DyadicPolynomial,
    pub delta: DyadicPolynomial,
    pub lambda: DyadicPolynomial,
    pub xi: DyadicPolynomial,
    /// `Γ_i² − Δ_i² = t(Γ_i(z²) − Δ_i(z²))`
    pub difference_of_squares: bool,
    /// `Λ_i = tΓ_i(z²)`
    pub lambda_identity: bool,
    /// `Ξ_i = tΔ_i(z²)`
    pub xi_identity: bool,
    /// `Λ_i(1) = t`
    pub mass_identity: bool,
}

impl LevelCheck {
    pub fn holds(&self) -> bool {
        self.difference_of_squares && self.lambda_identity && self.xi_identity && self.mass_identity
    }

    fn first_failure(&self) -> Option<&'static str> {
        [
            (self.difference_of_squares, "difference of squares"),
            (self.lambda_identity, "source leftover"),
            (self.xi_identity, "target leftover"),
            (self.mass_identity, "mass reduction"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderCheck {
    pub holds: bool,
    pub t: DyadicRational,
    pub levels: Vec<LevelCheck>,
    pub first_failure: Option<String>,
    /// Set when the ladder ran out of leftovers before the requested depth.
    pub terminated_at: Option<usize>,
}

/// Checks the ladder identities level by level using class-aggregated matchings.
///
/// At each level the leftover generating functions are the positive parts of
/// `Γ_i² − Δ_i²` and `Δ_i² − Γ_i²` (a mompm matches the smaller count of each
/// probability class), and the next level's functions are those leftovers
/// renormalized to total mass one.
pub fn verify_ladder(
    gamma: &DyadicPolynomial,
    delta: &DyadicPolynomial,
    t: &DyadicRational,
    depth: usize,
) -> LadderCheck {
    let mut gamma = gamma.clone();
    let mut delta = delta.clone();
    let mut levels = Vec::new();
    let mut first_failure = None;
    let mut terminated_at = None;

    for level in 1..=depth {
        let upsilon = gamma.square();
        let omega = delta.square();
        let diff = &upsilon - &omega;
        let lambda = diff.positive_part();
        let xi = (-&diff).positive_part();
        let gamma_sq = gamma.substitute_z_squared().scale(t);
        let delta_sq = delta.substitute_z_squared().scale(t);
        let check = LevelCheck {
            level,
            difference_of_squares: diff == &gamma_sq - &delta_sq,
            lambda_identity: lambda == gamma_sq,
            xi_identity: xi == delta_sq,
            mass_identity: lambda.eval_at_one() == *t,
            gamma: gamma.clone(),
            delta: delta.clone(),
            lambda: lambda.clone(),
            xi: xi.clone(),
        };
        if first_failure.is_none() {
            if let Some(name) = check.first_failure() {
                first_failure = Some(format!("level {level}: {name}"));
            }
        }
        levels.push(check);

        let mass = lambda.eval_at_one();
        if mass.is_zero() || xi.is_zero() {
            if level < depth {
                terminated_at = Some(level);
            }
            break;
        }
        let shift = match mass.log2_exact() {
            Some(k) if k <= 0 => -k,
            _ => {
                first_failure
                    .get_or_insert_with(|| format!("level {level}: leftover mass {mass} is not a power of two"));
                break;
            }
        };
        // r̃ = r / mass, so coefficients scale by 2^shift and degrees drop by shift.
        let renormalize = |p: &DyadicPolynomial| p.scale(&DyadicRational::pow2(shift)).shift(-shift);
        match (renormalize(&lambda), renormalize(&xi)) {
            (Some(g), Some(d)) => {
                gamma = g;
                delta = d;
            }
            _ => {
                first_failure.get_or_insert_with(|| format!("level {level}: renormalized degree below zero"));
                break;
            }
        }
    }

    LadderCheck { holds: first_failure.is_none(), t: t.clone(), levels, first_failure, terminated_at }
}
