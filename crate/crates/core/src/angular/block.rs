//! A (T, parity) channel block with its frame transformations.
//!
//! Case-(c) states are not tabulated: they are obtained as the joint
//! eigenvectors of body-frame operators built in the explicit product
//! representation (Ω² = (J·n̂)², I², ι² = (I·n̂)², Φ² = (F·n̂)²) together with
//! the antisymmetrized resonant dipole operator, whose eigenvalue fixes σ.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::channels::{case_e_channels, CaseCChannel, CaseEChannel, Manifold, Parity, ProductChannel};
use super::halfint::HalfInt;
use super::product::ProductSpace;
use super::AngularError;

/// Coupling scheme used by `frame_transform`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    CaseE,
    CaseC,
    /// Uncoupled |f₁ m₁ f₂ m₂ R m_R⟩ states at the given M_T.
    Product { m_t: i32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ChannelBlock {
    pub t: i32,
    pub parity: Parity,
    pub manifold: Manifold,
    pub channels: Vec<CaseEChannel>,
    pub case_c: Vec<CaseCChannel>,
    /// Columns are the case-(c) states expressed in the case-(e) channels.
    #[serde(skip)]
    pub case_c_vectors: DMatrix<f64>,
    /// Resonant dipole operator (units d_A²/r³) in the case-(e) basis.
    #[serde(skip)]
    pub resonant_dipole: DMatrix<f64>,
    /// Exchange part d_A·d_B (eigenvalues ±1) in the case-(e) basis.
    #[serde(skip)]
    pub dipole_exchange: DMatrix<f64>,
}

/// Largest R present in any block of total angular momentum `t`.
pub(crate) fn block_r_max(t: i32, manifold: Manifold) -> i32 {
    match manifold {
        Manifold::Ground => t + 1,
        Manifold::Excited => t + 2,
    }
}

/// Product space large enough that the n̂-bilinear operators are exact on the block.
pub(crate) fn product_space_for(t: i32, manifold: Manifold) -> ProductSpace {
    ProductSpace::new(manifold, block_r_max(t, manifold) + 1)
}

fn project(op: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis.transpose() * op * basis
}

fn rayleigh(op: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(op * v))
}

/// sqrt of a projection Casimir that should be a perfect square; returns 2·value.
fn twice_projection(sq: f64) -> i32 {
    (2.0 * sq.max(0.0).sqrt()).round() as i32
}

/// Channel enumeration plus cached frame transformations for one block.
pub fn enumerate_channels(t: i32, parity: Parity, manifold: Manifold) -> Result<ChannelBlock, AngularError> {
    let channels = case_e_channels(t, parity, manifold)?;
    let n = channels.len();
    if n == 0 {
        return Ok(ChannelBlock {
            t,
            parity,
            manifold,
            channels,
            case_c: Vec::new(),
            case_c_vectors: DMatrix::zeros(0, 0),
            resonant_dipole: DMatrix::zeros(0, 0),
            dipole_exchange: DMatrix::zeros(0, 0),
        });
    }
    let space = product_space_for(t, manifold);
    let m_t = HalfInt::ZERO;
    let e_basis = DMatrix::from_columns(
        &channels.iter().map(|c| space.case_e_vector(c, m_t)).collect::<Vec<_>>(),
    );

    let (dd, xx) = match manifold {
        Manifold::Excited => (
            project(&space.resonant_dipole(), &e_basis),
            project(&space.dipole_exchange(), &e_basis),
        ),
        Manifold::Ground => (DMatrix::zeros(n, n), DMatrix::zeros(n, n)),
    };
    let om2 = project(&space.omega_squared(), &e_basis);
    let i2 = project(&space.nuclear_spin_squared(), &e_basis);
    let io2 = project(&space.iota_squared(), &e_basis);
    let ph2 = project(&space.phi_squared(), &e_basis);

    // label-separating combination; every label tuple maps to a distinct value
    let combo = &dd * 1000.0 + &om2 * 100.0 + &i2 * 10.0 + &io2 + &ph2 * 0.1;
    let eig = nalgebra::SymmetricEigen::new(symmetrize(&combo));

    let j = manifold.electronic_j();
    let mut states: Vec<(CaseCChannel, DVector<f64>)> = (0..n)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_sign(&mut v);
            let omega = HalfInt::from_twice(twice_projection(rayleigh(&om2, &v)));
            let dd_val = rayleigh(&dd, &v);
            let sigma = match manifold {
                Manifold::Ground => 1,
                Manifold::Excited => {
                    let s = if omega == HalfInt::ZERO { dd_val / 2.0 } else { -dd_val };
                    if s >= 0.0 {
                        1
                    } else {
                        -1
                    }
                }
            };
            let i_val = rayleigh(&i2, &v);
            let i_label = HalfInt::from_twice(((-1.0 + (1.0 + 4.0 * i_val).sqrt()).round()) as i32);
            let ch = CaseCChannel {
                j,
                omega,
                sigma,
                i: i_label,
                iota: HalfInt::from_twice(twice_projection(rayleigh(&io2, &v))),
                phi: HalfInt::from_twice(twice_projection(rayleigh(&ph2, &v))),
                t: HalfInt::int(t),
                parity,
            };
            (ch, v)
        })
        .collect();
    states.sort_by(|a, b| a.0.cmp(&b.0));
    let case_c: Vec<CaseCChannel> = states.iter().map(|s| s.0).collect();
    let case_c_vectors = DMatrix::from_columns(&states.iter().map(|s| s.1.clone()).collect::<Vec<_>>());

    Ok(ChannelBlock {
        t,
        parity,
        manifold,
        channels,
        case_c,
        case_c_vectors,
        resonant_dipole: symmetrize(&dd),
        dipole_exchange: symmetrize(&xx),
    })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn fix_sign(v: &mut DVector<f64>) {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].abs() > v[best].abs() + 1e-9 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.neg_mut();
    }
}

impl ChannelBlock {
    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    /// Coefficient of σ·C₃^Ω for each case-(c) state, i.e. the diagonal of
    /// the resonant dipole operator in the case-(c) basis.
    pub fn case_c_dipole_values(&self) -> Vec<f64> {
        let d = self.case_c_vectors.transpose() * &self.resonant_dipole * &self.case_c_vectors;
        (0..self.len()).map(|k| d[(k, k)]).collect()
    }

    /// Product basis states spanning this block at the given M_T.
    pub fn product_channels(&self, m_t: i32) -> Vec<ProductChannel> {
        let mut out = Vec::new();
        let f1 = HalfInt::HALF;
        let f2s: Vec<HalfInt> = match self.manifold {
            Manifold::Ground => vec![HalfInt::HALF],
            Manifold::Excited => vec![HalfInt::HALF, HalfInt::from_twice(3)],
        };
        let r_max = block_r_max(self.t, self.manifold);
        for f2 in f2s {
            for m1 in f1.projections() {
                for m2 in f2.projections() {
                    for r in 0..=r_max {
                        let p = self.manifold.intrinsic_parity() * if r % 2 == 0 { 1 } else { -1 };
                        if p != self.parity.sign() {
                            continue;
                        }
                        let m_r = HalfInt::int(m_t) - m1 - m2;
                        if !m_r.is_integer() || m_r.as_int().abs() > r {
                            continue;
                        }
                        out.push(ProductChannel {
                            f1,
                            m1,
                            f2,
                            m2,
                            r: HalfInt::int(r),
                            m_r,
                            m_t: HalfInt::int(m_t),
                            parity: self.parity,
                        });
                    }
                }
            }
        }
        out
    }

    /// Case-(e) states as columns in the explicit product space at M_T.
    pub fn case_e_in_space(&self, space: &ProductSpace, m_t: i32) -> DMatrix<f64> {
        DMatrix::from_columns(
            &self
                .channels
                .iter()
                .map(|c| space.case_e_vector(c, HalfInt::int(m_t)))
                .collect::<Vec<_>>(),
        )
    }

    /// Isometry whose columns are the case-(e) channels written in the product basis.
    fn product_isometry(&self, m_t: i32) -> Result<DMatrix<f64>, AngularError> {
        if m_t.abs() > self.t {
            return Err(AngularError::BadLabel(format!("M_T={m_t} outside T={}", self.t)));
        }
        let space = product_space_for(self.t, self.manifold);
        let e = self.case_e_in_space(&space, m_t);
        let prods = self.product_channels(m_t);
        let p = DMatrix::from_columns(
            &prods
                .iter()
                .map(|pc| space.product_vector(pc.f2, pc.m1, pc.m2, pc.r.as_int(), pc.m_r.as_int()))
                .collect::<Vec<_>>(),
        );
        Ok(p.transpose() * e)
    }

    /// Matrix U mapping coefficients in `from` to coefficients in `to`.
    ///
    /// CaseE ↔ CaseC is square orthogonal. Transforms involving the product
    /// basis are isometries: the uncoupled states at fixed M_T span several T,
    /// so only the block's subspace is mapped.
    pub fn frame_transform(&self, from: Basis, to: Basis) -> Result<DMatrix<f64>, AngularError> {
        use Basis::*;
        let n = self.len();
        Ok(match (from, to) {
            (CaseE, CaseE) | (CaseC, CaseC) => DMatrix::identity(n, n),
            (CaseC, CaseE) => self.case_c_vectors.clone(),
            (CaseE, CaseC) => self.case_c_vectors.transpose(),
            (CaseE, Product { m_t }) => self.product_isometry(m_t)?,
            (Product { m_t }, CaseE) => self.product_isometry(m_t)?.transpose(),
            (CaseC, Product { m_t }) => self.product_isometry(m_t)? * &self.case_c_vectors,
            (Product { m_t }, CaseC) => (self.product_isometry(m_t)? * &self.case_c_vectors).transpose(),
            (Product { m_t: a }, Product { m_t: b }) => {
                if a != b {
                    return Err(AngularError::DimensionMismatch(format!("product bases at M_T={a} and M_T={b}")));
                }
                let p = self.product_isometry(a)?;
                &p * p.transpose()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_dev_from_identity(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        (m - DMatrix::<f64>::identity(n, n)).abs().max()
    }

    #[test]
    fn s_block_case_c_content() {
        let b = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        assert_eq!(b.len(), 5);
        let u = &b.case_c_vectors;
        assert!(max_dev_from_identity(&(u * u.transpose())) < 1e-12);
        for (c, v) in b.case_c.iter().zip(b.case_c_dipole_values()) {
            let expected = if c.omega == HalfInt::ZERO { 2.0 * c.sigma as f64 } else { -(c.sigma as f64) };
            assert!((v - expected).abs() < 1e-10, "{c}: {v}");
        }
    }

    #[test]
    fn dipole_operator_spectrum_is_body_frame() {
        for (t, p) in [(1, Parity::Odd), (0, Parity::Even), (1, Parity::Even), (2, Parity::Even), (3, Parity::Even), (2, Parity::Odd)] {
            let b = enumerate_channels(t, p, Manifold::Excited).unwrap();
            let ev = nalgebra::SymmetricEigen::new(b.resonant_dipole.clone()).eigenvalues;
            for e in ev.iter() {
                assert!([-2.0, -1.0, 1.0, 2.0].iter().any(|x| (e - x).abs() < 1e-10), "T={t} {p}: {e}");
            }
            let xv = nalgebra::SymmetricEigen::new(b.dipole_exchange.clone()).eigenvalues;
            for e in xv.iter() {
                assert!((e.abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn body_frame_operators_commute() {
        let space = product_space_for(2, Manifold::Excited);
        let b = enumerate_channels(2, Parity::Even, Manifold::Excited).unwrap();
        let e = b.case_e_in_space(&space, 0);
        let ops = [
            project(&space.resonant_dipole(), &e),
            project(&space.omega_squared(), &e),
            project(&space.iota_squared(), &e),
            project(&space.nuclear_spin_squared(), &e),
            project(&space.phi_squared(), &e),
            project(&space.dipole_exchange(), &e),
        ];
        for a in &ops {
            for c in &ops {
                let comm = a * c - c * a;
                assert!(comm.abs().max() < 1e-11);
            }
        }
    }

    #[test]
    fn product_transform_round_trip() {
        let b = enumerate_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        for m_t in -1..=1 {
            let to = b.frame_transform(Basis::CaseE, Basis::Product { m_t }).unwrap();
            let back = b.frame_transform(Basis::Product { m_t }, Basis::CaseE).unwrap();
            assert!(max_dev_from_identity(&(back * to)) < 1e-12);
        }
        let ec = b.frame_transform(Basis::CaseE, Basis::CaseC).unwrap();
        let ce = b.frame_transform(Basis::CaseC, Basis::CaseE).unwrap();
        assert!(max_dev_from_identity(&(ce * ec)) < 1e-12);
    }

    #[test]
    fn one_channel_block_transform_is_sign() {
        let b = enumerate_channels(0, Parity::Even, Manifold::Ground).unwrap();
        assert_eq!(b.len(), 1);
        let u = b.frame_transform(Basis::CaseE, Basis::CaseC).unwrap();
        assert!((u[(0, 0)].abs() - 1.0).abs() < 1e-14);
    }
}
