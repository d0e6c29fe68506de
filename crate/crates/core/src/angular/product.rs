//! Explicit uncoupled representation of two-atom states.
//!
//! A state is written in the "sector" where atom A is in ¹S₀ and atom B
//! carries the electronic angular momentum J (J = 1 for ³P₁, J = 0 in the
//! ground manifold):
//!
//! |m_a⟩_A ⊗ |J M, m_b⟩_B ⊗ |R m_R⟩
//!
//! with m_a, m_b the nuclear-spin projections. A physical (antisymmetrized)
//! excited state (|φ⟩ − P₁₂|φ⟩)/√2 is fully determined by its sector
//! representative |φ⟩, and operators that move the excitation between the
//! atoms reduce to ordinary matrices on that sector. All matrices here are
//! built on the full (unconstrained-M_T) tensor space; every operator we form
//! conserves M_T, so block vectors for any M_T can share one space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::channels::{CaseEChannel, Manifold};
use super::halfint::HalfInt;
use super::wigner::{clebsch_gordan, wigner3j};

/// One internal state: twice the projections (m_a, M, m_b).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InternalState {
    pub ma: i32,
    pub em: i32,
    pub mb: i32,
}

#[derive(Clone, Debug)]
pub struct ProductSpace {
    pub manifold: Manifold,
    pub internal: Vec<InternalState>,
    /// (R, m_R) pairs as plain integers.
    pub orbital: Vec<(i32, i32)>,
    pub r_max: i32,
}

const HALF_PROJ: [i32; 2] = [-1, 1];

fn spherical_sign(q: i32) -> f64 {
    if q.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Matrix of the spherical component J_q on a single angular momentum j.
fn angular_momentum_component(twice_j: i32, q: i32) -> DMatrix<f64> {
    let j = HalfInt::from_twice(twice_j);
    let ms: Vec<HalfInt> = j.projections().collect();
    let n = ms.len();
    let norm = j.casimir().sqrt();
    DMatrix::from_fn(n, n, |a, b| norm * clebsch_gordan(j, ms[b], HalfInt::ONE, HalfInt::int(q), j, ms[a]))
}

impl ProductSpace {
    /// Tensor space with orbital angular momenta 0..=r_max.
    pub fn new(manifold: Manifold, r_max: i32) -> Self {
        let jj = manifold.electronic_j().twice();
        let mut internal = Vec::new();
        for &ma in &HALF_PROJ {
            for em in (-jj..=jj).step_by(2) {
                for &mb in &HALF_PROJ {
                    internal.push(InternalState { ma, em, mb });
                }
            }
        }
        let mut orbital = Vec::new();
        for r in 0..=r_max {
            for m in -r..=r {
                orbital.push((r, m));
            }
        }
        ProductSpace { manifold, internal, orbital, r_max }
    }

    pub fn dim(&self) -> usize {
        self.internal.len() * self.orbital.len()
    }

    pub fn n_internal(&self) -> usize {
        self.internal.len()
    }

    pub fn n_orbital(&self) -> usize {
        self.orbital.len()
    }

    pub fn index(&self, internal: usize, orbital: usize) -> usize {
        internal * self.orbital.len() + orbital
    }

    fn orbital_index(&self, r: i32, m: i32) -> Option<usize> {
        if r > self.r_max || m.abs() > r {
            return None;
        }
        Some((r * r + (m + r)) as usize)
    }

    /// C¹_q(n̂) acting on |R m_R⟩.
    pub fn unit_vector_component(&self, q: i32) -> DMatrix<f64> {
        let n = self.n_orbital();
        let mut out = DMatrix::zeros(n, n);
        for (col, &(r, m)) in self.orbital.iter().enumerate() {
            for rp in [r - 1, r + 1] {
                let mp = m + q;
                let Some(row) = self.orbital_index(rp, mp) else { continue };
                let h = HalfInt::int;
                let red = ((2 * r + 1) * (2 * rp + 1)) as f64;
                let v = spherical_sign(mp)
                    * red.sqrt()
                    * wigner3j(h(rp), HalfInt::ONE, h(r), h(-mp), h(q), h(m))
                    * wigner3j(h(rp), HalfInt::ONE, h(r), HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO);
                out[(row, col)] = v;
            }
        }
        out
    }

    /// (-1)^R on the orbital space.
    pub fn orbital_parity(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.n_orbital(),
            self.orbital.iter().map(|&(r, _)| spherical_sign(r)),
        ))
    }

    fn internal_op<F: Fn(&InternalState, &InternalState) -> f64>(&self, f: F) -> DMatrix<f64> {
        let n = self.n_internal();
        DMatrix::from_fn(n, n, |a, b| f(&self.internal[a], &self.internal[b]))
    }

    /// Electronic J_q of atom B.
    pub fn electronic_component(&self, q: i32) -> DMatrix<f64> {
        let jj = self.manifold.electronic_j().twice();
        let single = angular_momentum_component(jj, q);
        self.internal_op(|a, b| {
            if a.ma != b.ma || a.mb != b.mb {
                return 0.0;
            }
            single[(((a.em + jj) / 2) as usize, ((b.em + jj) / 2) as usize)]
        })
    }

    /// Nuclear spin component of atom A (`atom_a = true`) or B.
    pub fn nuclear_component(&self, q: i32, atom_a: bool) -> DMatrix<f64> {
        let single = angular_momentum_component(1, q);
        self.internal_op(|a, b| {
            if a.em != b.em {
                return 0.0;
            }
            if atom_a {
                if a.mb != b.mb {
                    return 0.0;
                }
                single[(((a.ma + 1) / 2) as usize, ((b.ma + 1) / 2) as usize)]
            } else {
                if a.ma != b.ma {
                    return 0.0;
                }
                single[(((a.mb + 1) / 2) as usize, ((b.mb + 1) / 2) as usize)]
            }
        })
    }

    /// Exchanges the two nuclear spin projections.
    pub fn nuclear_swap(&self) -> DMatrix<f64> {
        self.internal_op(|a, b| if a.em == b.em && a.ma == b.mb && a.mb == b.ma { 1.0 } else { 0.0 })
    }

    /// Σ_q (-1)^q A_q ⊗ C¹_{-q}: scalar product of an internal vector operator with n̂.
    pub fn dot_unit_vector(&self, comps: &[DMatrix<f64>; 3]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for (k, q) in (-1..=1).enumerate() {
            out += kron(&comps[k], &self.unit_vector_component(-q)) * spherical_sign(q);
        }
        out
    }

    fn vector_operator<F: Fn(i32) -> DMatrix<f64>>(&self, f: F) -> [DMatrix<f64>; 3] {
        [f(-1), f(0), f(1)]
    }

    /// (J·n̂)², whose eigenvalues are Ω².
    pub fn omega_squared(&self) -> DMatrix<f64> {
        let jn = self.dot_unit_vector(&self.vector_operator(|q| self.electronic_component(q)));
        &jn * &jn
    }

    /// (I·n̂)², whose eigenvalues are ι².
    pub fn iota_squared(&self) -> DMatrix<f64> {
        let comps = self.vector_operator(|q| self.nuclear_component(q, true) + self.nuclear_component(q, false));
        let n = self.dot_unit_vector(&comps);
        &n * &n
    }

    /// (F·n̂)² with F = J + i_A + i_B; eigenvalues Φ².
    pub fn phi_squared(&self) -> DMatrix<f64> {
        let comps = self.vector_operator(|q| {
            self.electronic_component(q) + self.nuclear_component(q, true) + self.nuclear_component(q, false)
        });
        let n = self.dot_unit_vector(&comps);
        &n * &n
    }

    /// Total nuclear spin I².
    pub fn nuclear_spin_squared(&self) -> DMatrix<f64> {
        let mut i2 = DMatrix::zeros(self.n_internal(), self.n_internal());
        for q in -1..=1 {
            let iq = self.nuclear_component(q, true) + self.nuclear_component(q, false);
            let imq = self.nuclear_component(-q, true) + self.nuclear_component(-q, false);
            i2 += (&iq * &imq) * spherical_sign(q);
        }
        kron(&i2, &DMatrix::identity(self.n_orbital(), self.n_orbital()))
    }

    /// Resonant dipole–dipole exchange operator in units of d_A²/r³.
    ///
    /// Represents [d_A·d_B − 3(d_A·n̂)(d_B·n̂)] acting on the antisymmetrized
    /// state, i.e. −V_dd P₁₂ on the sector. Eigenvalues are −2X for Ω = 0 and
    /// +X for |Ω| = 1, X = ±1 being the exchange symmetry of the excitation.
    pub fn resonant_dipole(&self) -> DMatrix<f64> {
        assert_eq!(self.manifold, Manifold::Excited, "dipole exchange needs an excited manifold");
        let nvec: Vec<DMatrix<f64>> = (-1..=1).map(|q| self.unit_vector_component(q)).collect();
        let comp = |q: i32| &nvec[(q + 1) as usize];
        let n_orb = self.n_orbital();
        let swap = self.nuclear_swap();
        let mut tensor = DMatrix::zeros(self.dim(), self.dim());
        for m in -1..=1 {
            for mp in -1..=1 {
                // |M'⟩⟨M| on the electronic state of atom B, nuclear swap included
                let el = self.internal_op(|a, b| {
                    if a.em == 2 * mp && b.em == 2 * m && a.ma == b.mb && a.mb == b.ma {
                        1.0
                    } else {
                        0.0
                    }
                });
                let orb = comp(m) * comp(-mp);
                tensor += kron(&el, &orb) * spherical_sign(mp);
            }
        }
        let scalar = kron(&swap, &DMatrix::identity(n_orb, n_orb));
        let par = kron(&DMatrix::identity(self.n_internal(), self.n_internal()), &self.orbital_parity());
        -(scalar - tensor * 3.0) * par
    }

    /// Scalar part d_A·d_B of the exchange: −(−1)^R × nuclear swap.
    /// Eigenvalue +1 marks superradiant, −1 subradiant pair states.
    pub fn dipole_exchange(&self) -> DMatrix<f64> {
        let swap = self.nuclear_swap();
        -kron(&swap, &self.orbital_parity())
    }

    /// Atom exchange P₁₂ in the ground manifold.
    pub fn ground_exchange(&self) -> DMatrix<f64> {
        assert_eq!(self.manifold, Manifold::Ground);
        kron(&self.nuclear_swap(), &self.orbital_parity())
    }

    /// Coupled case-(e) state |f₁ f₂ F R; T M_T⟩ as a vector in this space.
    pub fn case_e_vector(&self, ch: &CaseEChannel, m_t: HalfInt) -> DVector<f64> {
        let jj = self.manifold.electronic_j();
        let half = HalfInt::HALF;
        let mut v = DVector::zeros(self.dim());
        for (ii, s) in self.internal.iter().enumerate() {
            let ma = HalfInt::from_twice(s.ma);
            let em = HalfInt::from_twice(s.em);
            let mb = HalfInt::from_twice(s.mb);
            let m2 = em + mb;
            if !ch.f2.admits(m2) {
                continue;
            }
            let c_f2 = clebsch_gordan(jj, em, half, mb, ch.f2, m2);
            if c_f2 == 0.0 {
                continue;
            }
            let mf = ma + m2;
            if !ch.f.admits(mf) {
                continue;
            }
            let c_f = clebsch_gordan(ch.f1, ma, ch.f2, m2, ch.f, mf);
            let m_r = m_t - mf;
            if !ch.r.admits(m_r) {
                continue;
            }
            let c_t = clebsch_gordan(ch.f, mf, ch.r, m_r, ch.t, m_t);
            if let Some(oi) = self.orbital_index(ch.r.as_int(), m_r.as_int()) {
                v[self.index(ii, oi)] = c_f2 * c_f * c_t;
            }
        }
        v
    }

    /// Uncoupled product state |f₁ m₁ f₂ m₂ R m_R⟩.
    pub fn product_vector(&self, f2: HalfInt, m1: HalfInt, m2: HalfInt, r: i32, m_r: i32) -> DVector<f64> {
        let jj = self.manifold.electronic_j();
        let mut v = DVector::zeros(self.dim());
        let Some(oi) = self.orbital_index(r, m_r) else { return v };
        for (ii, s) in self.internal.iter().enumerate() {
            if s.ma != m1.twice() {
                continue;
            }
            let c = clebsch_gordan(jj, HalfInt::from_twice(s.em), HalfInt::HALF, HalfInt::from_twice(s.mb), f2, m2);
            if c != 0.0 {
                v[self.index(ii, oi)] = c;
            }
        }
        v
    }

    /// Absorption on atom B, ground-manifold space → excited-manifold space,
    /// for a Cartesian polarization vector ε. Atomic dipole normalized so that
    /// ⟨1 q|d_q|0 0⟩ = 1.
    pub fn absorption_from_ground(ground: &ProductSpace, excited: &ProductSpace, eps: [Complex64; 3]) -> nalgebra::DMatrix<Complex64> {
        assert_eq!(ground.manifold, Manifold::Ground);
        assert_eq!(excited.manifold, Manifold::Excited);
        assert_eq!(ground.r_max, excited.r_max);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = Complex64::i();
        // spherical coefficients c_q of d·ε = Σ_q c_q d_q
        let c = [
            (eps[0] + i * eps[1]) * s, // q = -1
            eps[2],                    // q = 0
            (-eps[0] + i * eps[1]) * s, // q = +1
        ];
        let mut out = nalgebra::DMatrix::<Complex64>::zeros(excited.dim(), ground.dim());
        for (gi, g) in ground.internal.iter().enumerate() {
            for (ei, e) in excited.internal.iter().enumerate() {
                if e.ma != g.ma || e.mb != g.mb {
                    continue;
                }
                let q = e.em / 2;
                let coef = c[(q + 1) as usize];
                for o in 0..ground.n_orbital() {
                    out[(excited.index(ei, o), ground.index(gi, o))] = coef;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_vector_is_normalized() {
        // Σ_q (-1)^q n_q n_{-q} = 1 on states whose neighbours are inside the space
        let space = ProductSpace::new(Manifold::Ground, 4);
        let mut n2 = DMatrix::zeros(space.n_orbital(), space.n_orbital());
        for q in -1..=1 {
            n2 += space.unit_vector_component(q) * space.unit_vector_component(-q) * spherical_sign(q);
        }
        for (i, &(r, _)) in space.orbital.iter().enumerate() {
            if r < space.r_max {
                for j in 0..space.n_orbital() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((n2[(i, j)] - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn angular_momentum_commutator() {
        // [J_x, J_y] = i J_z  ⇔  [J_{+1}, J_{-1}] = -J_0
        for twice_j in [1, 2, 3] {
            let jp = angular_momentum_component(twice_j, 1);
            let jm = angular_momentum_component(twice_j, -1);
            let j0 = angular_momentum_component(twice_j, 0);
            let comm = &jp * &jm - &jm * &jp;
            assert!((comm + j0).abs().max() < 1e-14);
        }
    }

    #[test]
    fn case_e_vectors_orthonormal() {
        use super::super::channels::{case_e_channels, Parity};
        let space = ProductSpace::new(Manifold::Excited, 5);
        let chans = case_e_channels(1, Parity::Odd, Manifold::Excited).unwrap();
        for m_t in [-1, 0, 1] {
            let vs: Vec<_> = chans.iter().map(|c| space.case_e_vector(c, HalfInt::int(m_t))).collect();
            for (i, a) in vs.iter().enumerate() {
                for (j, b) in vs.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((a.dot(b) - expect).abs() < 1e-13);
                }
            }
        }
    }
}
