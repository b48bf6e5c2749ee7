//! Jordan–Wigner free-fermion solution of the open XY-family chains.
//!
//! With `n_i = (1 − Z_i)/2` the chain becomes
//!
//! ```text
//! H = Σ_ij A_ij c†_i c_j + ½ Σ_ij (B_ij c†_i c†_j + h.c.) + gL
//! A_ii = −2g,  A_{b,b+1} = A_{b+1,b} = J_b,  B_{b,b+1} = −B_{b+1,b} = γ J_b
//! ```
//!
//! and is diagonalized by the singular value decomposition
//! `A − B = Φ diag(ε) Ψᵀ`, with Bogoliubov blocks `U = (Φ+Ψ)/2`,
//! `V = (Φ−Ψ)/2`. The Ising chain `ZZ + gX` is the γ = 1 XY chain after a
//! global Hadamard, which leaves energies and overlaps unchanged.

use nalgebra::DMatrix;

use crate::error::{validation, Error, Result};
use crate::metrology::{FisherKind, FisherRecord};
use crate::spin_model::{ModelKind, ModelSpec};

#[derive(Debug, Clone)]
pub struct BdgDecomposition {
    pub l: usize,
    /// Quasiparticle energies, ascending and non-negative.
    pub single_particle_energies: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// Fermion parity of the quasiparticle vacuum, ±1 relative to the
    /// all-up (empty) state.
    pub parity: i8,
    phi: DMatrix<f64>,
    psi: DMatrix<f64>,
}

impl BdgDecomposition {
    pub fn ground_energy(&self) -> f64 {
        -0.5 * self.single_particle_energies.iter().sum::<f64>()
    }

    /// Smallest quasiparticle energy, i.e. the many-body gap in the vacuum's
    /// parity sector.
    pub fn gap(&self) -> f64 {
        self.single_particle_energies[0]
    }
}

/// Hopping and pairing matrices of the Jordan–Wigner image.
fn quadratic_form(spec: &ModelSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    spec.validate()?;
    let l = spec.l;
    let gamma = match spec.kind {
        ModelKind::Ising => 1.0,
        ModelKind::Xy | ModelKind::Mxy => spec.gamma,
    };
    let mut a = DMatrix::<f64>::zeros(l, l);
    let mut b = DMatrix::<f64>::zeros(l, l);
    for i in 0..l {
        a[(i, i)] = -2.0 * spec.field;
    }
    for bond in 0..l - 1 {
        let j = spec.bond_coupling(bond);
        a[(bond, bond + 1)] = j;
        a[(bond + 1, bond)] = j;
        b[(bond, bond + 1)] = gamma * j;
        b[(bond + 1, bond)] = -gamma * j;
    }
    Ok((a, b))
}

pub fn bdg_decompose(spec: &ModelSpec) -> Result<BdgDecomposition> {
    let (a, b) = quadratic_form(spec)?;
    let l = spec.l;
    let svd = (&a - &b).svd(true, true);
    let (Some(phi_raw), Some(psi_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical(
            "SVD did not return singular vectors".into(),
        ));
    };
    let psi_raw = psi_t.transpose();

    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let mut phi = DMatrix::<f64>::zeros(l, l);
    let mut psi = DMatrix::<f64>::zeros(l, l);
    let mut energies = Vec::with_capacity(l);
    for (dst, &src) in order.iter().enumerate() {
        phi.set_column(dst, &phi_raw.column(src));
        psi.set_column(dst, &psi_raw.column(src));
        energies.push(svd.singular_values[src]);
    }

    let u = (&phi + &psi) * 0.5;
    let v = (&phi - &psi) * 0.5;
    let parity = if phi.determinant() * psi.determinant() >= 0.0 {
        1
    } else {
        -1
    };
    Ok(BdgDecomposition {
        l,
        single_particle_energies: energies,
        u,
        v,
        parity,
        phi,
        psi,
    })
}

/// Result of a vacuum–vacuum overlap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    /// `|⟨GS_a|GS_b⟩|`.
    pub value: f64,
    /// Set when the two vacua lie in different fermion-parity sectors, in
    /// which case `value` is zero for structural rather than numerical reasons.
    pub parity_mismatch: bool,
}

fn check_compatible(a: &ModelSpec, b: &ModelSpec) -> Result<()> {
    if a.l != b.l {
        return Err(validation(format!(
            "overlap needs equal L, got {} and {}",
            a.l, b.l
        )));
    }
    let ising = |s: &ModelSpec| s.kind == ModelKind::Ising;
    if ising(a) != ising(b) {
        return Err(Error::Unsupported(
            "overlaps between Ising and XY-family chains live in different spin bases".into(),
        ));
    }
    Ok(())
}

/// Ground-state overlap from the Onishi formula
/// `|⟨a|b⟩|² = |det(U_aᵀU_b + V_aᵀV_b)|`, evaluated in log space.
///
/// XY and MXY chains of equal length may be mixed.
pub fn gs_overlap(a: &ModelSpec, b: &ModelSpec) -> Result<Overlap> {
    check_compatible(a, b)?;
    let da = bdg_decompose(a)?;
    let db = bdg_decompose(b)?;
    Ok(vacuum_overlap(&da, &db))
}

pub fn vacuum_overlap(a: &BdgDecomposition, b: &BdgDecomposition) -> Overlap {
    if a.parity != b.parity {
        return Overlap {
            value: 0.0,
            parity_mismatch: true,
        };
    }
    let m = (a.phi.transpose() * &b.phi + a.psi.transpose() * &b.psi) * 0.5;
    let lu = m.lu();
    let u = lu.u();
    let log_abs_det: f64 = (0..u.nrows()).map(|i| u[(i, i)].abs().ln()).sum();
    Overlap {
        value: (0.5 * log_abs_det).exp().min(1.0 + 1e-12),
        parity_mismatch: false,
    }
}

/// `F_Q = 8(1 − f)/δ²` from exact ground states at `field` and `field + δ`
/// for each chain length.
pub fn qfi_scan_exact(
    template: &ModelSpec,
    ls: &[usize],
    field: f64,
    delta: f64,
) -> Result<Vec<FisherRecord>> {
    if !(delta > 0.0) {
        return Err(validation("finite-difference step must be positive"));
    }
    ls.iter()
        .map(|&l| {
            let a = template.with_l(l).with_field(field);
            let b = template.with_l(l).with_field(field + delta);
            let ov = gs_overlap(&a, &b)?;
            if ov.parity_mismatch {
                return Err(Error::Numerical(format!(
                    "ground states at L = {l} change parity between fields {field} and {}",
                    field + delta
                )));
            }
            let value = 8.0 * (1.0 - ov.value) / (delta * delta);
            Ok(FisherRecord::new(
                l,
                field,
                value.max(0.0),
                FisherKind::Qfi,
                None,
            ))
        })
        .collect()
}

/// Overlap between the MXY ground state at its critical field and the XY
/// ground state at `g = 1` for the same `L` and `γ`.
pub fn mxy_xy_probe_overlap(mxy: &ModelSpec) -> Result<Overlap> {
    if mxy.kind != ModelKind::Mxy {
        return Err(validation("expected an MXY spec"));
    }
    let crit = crate::spin_model::critical_field(mxy);
    let xy = ModelSpec::xy(mxy.l, mxy.gamma, 1.0);
    gs_overlap(&mxy.with_field(crit), &xy)
}
