//! Channel labels in the three coupling schemes and enumeration of the
//! channels that make up one (T, parity) block.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::halfint::{triangle, HalfInt};
use super::AngularError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_sign(sign: i32) -> Parity {
        if sign > 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

impl std::str::FromStr for Parity {
    type Err = AngularError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" | "+" | "+1" | "e" | "0" => Ok(Parity::Even),
            "odd" | "-" | "-1" | "o" => Ok(Parity::Odd),
            other => Err(AngularError::BadLabel(format!("parity '{other}'"))),
        }
    }
}

/// Ground manifold: both atoms in ¹S₀. Excited: one atom in ³P₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Manifold {
    Ground,
    Excited,
}

impl Manifold {
    /// Electronic angular momentum of the atom carrying the excitation.
    pub fn electronic_j(self) -> HalfInt {
        match self {
            Manifold::Ground => HalfInt::ZERO,
            Manifold::Excited => HalfInt::ONE,
        }
    }

    /// Product of the two atoms' intrinsic parities (³P is odd).
    pub fn intrinsic_parity(self) -> i32 {
        match self {
            Manifold::Ground => 1,
            Manifold::Excited => -1,
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Manifold::Ground => write!(f, "ground"),
            Manifold::Excited => write!(f, "excited"),
        }
    }
}

impl std::str::FromStr for Manifold {
    type Err = AngularError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ground" | "g" => Ok(Manifold::Ground),
            "excited" | "e" => Ok(Manifold::Excited),
            other => Err(AngularError::BadLabel(format!("manifold '{other}'"))),
        }
    }
}

/// Collision partial wave of the ground-state pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PartialWave {
    S,
    P,
}

/// Extended case-(e) channel |f₁ f₂ F R (T p)⟩. Atom 1 is the ¹S₀ atom.
/// In the ground manifold f₂ = 1/2 and F is the total nuclear spin I.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CaseEChannel {
    pub f1: HalfInt,
    pub f2: HalfInt,
    pub f: HalfInt,
    pub r: HalfInt,
    pub t: HalfInt,
    pub parity: Parity,
}

impl CaseEChannel {
    /// Frozen ordering key: lexicographic on (f₂, F, R).
    pub fn sort_key(&self) -> (i32, i32, i32) {
        (self.f2.twice(), self.f.twice(), self.r.twice())
    }

    pub fn is_valid(&self) -> bool {
        self.f1 == HalfInt::HALF
            && triangle(self.f1, self.f2, self.f)
            && triangle(self.f, self.r, self.t)
            && self.r.is_integer()
    }
}

impl fmt::Display for CaseEChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f2={} F={} R={}", self.f2, self.f, self.r)
    }
}

/// Extended case-(c) channel |J Ω I ι Φ (T p)⟩ with reflection label σ.
/// Ω, ι and Φ are stored as magnitudes: the block states are the ± combinations
/// of signed projections fixed by parity and exchange symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CaseCChannel {
    pub j: HalfInt,
    pub omega: HalfInt,
    pub sigma: i32,
    pub i: HalfInt,
    pub iota: HalfInt,
    pub phi: HalfInt,
    pub t: HalfInt,
    pub parity: Parity,
}

impl fmt::Display for CaseCChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sigma > 0 { '+' } else { '-' };
        write!(f, "Omega={} sigma={} I={} iota={} Phi={}", self.omega, s, self.i, self.iota, self.phi)
    }
}

/// Uncoupled product state |f₁ m₁ f₂ m₂ R m_R⟩ at fixed M_T.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProductChannel {
    pub f1: HalfInt,
    pub m1: HalfInt,
    pub f2: HalfInt,
    pub m2: HalfInt,
    pub r: HalfInt,
    pub m_r: HalfInt,
    pub m_t: HalfInt,
    pub parity: Parity,
}

impl fmt::Display for ProductChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f1={} m1={} f2={} m2={} R={} mR={}",
            self.f1, self.m1, self.f2, self.m2, self.r, self.m_r
        )
    }
}

fn allowed_f2(manifold: Manifold) -> Vec<HalfInt> {
    match manifold {
        Manifold::Ground => vec![HalfInt::HALF],
        Manifold::Excited => vec![HalfInt::HALF, HalfInt::from_twice(3)],
    }
}

/// Case-(e) channels of the (T, parity) block, in the frozen (f₂, F, R) order.
///
/// Ground blocks keep only the combinations allowed for identical fermions:
/// total nuclear spin I = 0 with even R and I = 1 with odd R. In the excited
/// manifold every distinguishable-atom channel corresponds to exactly one
/// antisymmetrized state, so no channel is removed there.
pub fn case_e_channels(t: i32, parity: Parity, manifold: Manifold) -> Result<Vec<CaseEChannel>, AngularError> {
    if t < 0 {
        return Err(AngularError::NegativeT(t));
    }
    let t = HalfInt::int(t);
    let f1 = HalfInt::HALF;
    let mut out = Vec::new();
    for f2 in allowed_f2(manifold) {
        for f in HalfInt::couple(f1, f2) {
            for r in HalfInt::couple(f, t) {
                let rr = r.as_int();
                let p = manifold.intrinsic_parity() * if rr % 2 == 0 { 1 } else { -1 };
                if p != parity.sign() {
                    continue;
                }
                if manifold == Manifold::Ground && (f.as_int() + rr) % 2 != 0 {
                    continue;
                }
                out.push(CaseEChannel { f1, f2, f, r, t, parity });
            }
        }
    }
    out.sort_by_key(|c| c.sort_key());
    out.dedup();
    Ok(out)
}

/// Excited (T, parity) blocks reachable by an electric-dipole transition from
/// the lowest ground partial wave of the given nuclear-spin symmetry.
pub fn allowed_excited_blocks(wave: PartialWave) -> Vec<(i32, Parity)> {
    // ground: s-wave is I=0, R=0 → T=0, even; p-wave is I=1, R=1 → T∈{0,1,2}, odd
    let (ground_ts, ground_parity): (Vec<i32>, Parity) = match wave {
        PartialWave::S => (vec![0], Parity::Even),
        PartialWave::P => (vec![0, 1, 2], Parity::Odd),
    };
    let mut out: Vec<(i32, Parity)> = Vec::new();
    for tg in ground_ts {
        for te in (tg - 1).max(0)..=tg + 1 {
            if tg == 0 && te == 0 {
                continue;
            }
            let block = (te, ground_parity.flip());
            if !out.contains(&block) {
                out.push(block);
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_wave_accessible_block_has_five_channels() {
        let ch = case_e_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        assert_eq!(ch.len(), 5);
        assert!(ch.windows(2).all(|w| w[0].sort_key() < w[1].sort_key()));
        assert!(ch.iter().all(|c| c.is_valid() && c.r.as_int() % 2 == 0));
    }

    #[test]
    fn ground_s_wave_is_single_singlet_channel() {
        let ch = case_e_channels(0, Parity::Even, Manifold::Ground).unwrap();
        assert_eq!(ch.len(), 1);
        assert_eq!(ch[0].f, HalfInt::ZERO);
        assert_eq!(ch[0].r, HalfInt::ZERO);
    }

    #[test]
    fn p_wave_accessible_blocks_total_nineteen_channels() {
        let blocks = allowed_excited_blocks(PartialWave::P);
        assert_eq!(blocks, vec![(0, Parity::Even), (1, Parity::Even), (2, Parity::Even), (3, Parity::Even)]);
        let counts: Vec<usize> = blocks
            .iter()
            .map(|&(t, p)| case_e_channels(t, p, Manifold::Excited).unwrap().len())
            .collect();
        assert_eq!(counts.iter().sum::<usize>(), 19);
        let degeneracy: usize = blocks.iter().zip(&counts).map(|(&(t, _), n)| n * (2 * t as usize + 1)).sum();
        assert_eq!(degeneracy, 89);
    }

    #[test]
    fn s_wave_selection_rule() {
        assert_eq!(allowed_excited_blocks(PartialWave::S), vec![(1, Parity::Odd)]);
    }

    #[test]
    fn negative_t_rejected() {
        assert!(matches!(case_e_channels(-1, Parity::Even, Manifold::Excited), Err(AngularError::NegativeT(-1))));
    }

    #[test]
    fn ground_exchange_symmetry() {
        for t in 0..5 {
            for p in [Parity::Even, Parity::Odd] {
                for c in case_e_channels(t, p, Manifold::Ground).unwrap() {
                    let i = c.f.as_int();
                    let r = c.r.as_int();
                    assert!((i == 0 && r % 2 == 0) || (i == 1 && r % 2 == 1));
                }
            }
        }
    }
}
