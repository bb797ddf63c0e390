//! Beam-sweeping codebooks for the three transmitter architectures.
//!
//! A fully-connected BD-RIS codeword is an M×M symmetric unitary matrix built
//! by Takagi decomposition so that it steers the feed illumination toward one
//! sweep target with (near) unit matching gain. The single-connected D-RIS
//! codeword is the diagonal phase-only benchmark, and the active-array (AAA)
//! codeword is the target steering vector itself.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{bs_ris_channel, ff_steering, nf_steering};
use crate::error::{Error, Result};
use crate::geometry::SystemGeometry;

/// Transmitter architecture under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    BdRis,
    DRis,
    Aaa,
}

impl Architecture {
    pub fn label(&self) -> &'static str {
        match self {
            Architecture::BdRis => "bd-ris",
            Architecture::DRis => "d-ris",
            Architecture::Aaa => "aaa",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bd-ris" | "bdris" | "bd" => Ok(Architecture::BdRis),
            "d-ris" | "dris" | "d" => Ok(Architecture::DRis),
            "aaa" => Ok(Architecture::Aaa),
            other => Err(Error::validation(format!(
                "unknown architecture '{other}' (expected bd-ris, d-ris or aaa)"
            ))),
        }
    }
}

/// Propagation scenario: spherical-wavefront near field (narrowband) or
/// planar-wavefront far field (wideband OFDM).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    NearField,
    FarField,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::NearField => "nf",
            Scenario::FarField => "ff",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "nf" | "near-field" | "near" => Ok(Scenario::NearField),
            "ff" | "far-field" | "far" => Ok(Scenario::FarField),
            other => Err(Error::validation(format!(
                "unknown scenario '{other}' (expected nf or ff)"
            ))),
        }
    }
}

/// Sweep-grid specification: the range ladder (near field only) and the
/// angular step in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub delta_r: f64,
    pub delta_theta_deg: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rho_min: 5.0, rho_max: 45.0, delta_r: 10.0, delta_theta_deg: 1.8 }
    }
}

/// Endpoint policy for the sweep grid. `Literal` keeps every grid point the
/// step generates (inclusive endpoints); `Truncate(t)` keeps only the first
/// `t` targets, matching published codebook sizes whose dropped points are
/// unspecified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    Literal,
    Truncate(usize),
}

/// One sweep target: a (range, angle) cell in the near field or a bare
/// angle in the far field. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepTarget {
    Point { r: f64, theta: f64 },
    Angle { theta: f64 },
}

impl SweepTarget {
    pub fn theta(&self) -> f64 {
        match self {
            SweepTarget::Point { theta, .. } | SweepTarget::Angle { theta } => *theta,
        }
    }

    pub fn r(&self) -> Option<f64> {
        match self {
            SweepTarget::Point { r, .. } => Some(*r),
            SweepTarget::Angle { .. } => None,
        }
    }
}

/// M×M phase-shift matrix with the passive-losslessness invariants:
/// unitary (max|ΩᴴΩ−I| < 1e-10) and symmetric (max|Ω−Ωᵀ| < 1e-12); the
/// d-ris variant is additionally diagonal with unit-modulus diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseShiftMatrix {
    omega: DMatrix<Complex64>,
    architecture: Architecture,
    flagged_zero_entries: usize,
}

impl PhaseShiftMatrix {
    pub fn omega(&self) -> &DMatrix<Complex64> {
        &self.omega
    }

    pub fn architecture(&self) -> Architecture {
        self.architecture
    }

    /// Count of diagonal entries whose phase was undefined (zero input
    /// product) and pinned to 0. Always 0 for physical channel inputs.
    pub fn flagged_zero_entries(&self) -> usize {
        self.flagged_zero_entries
    }

    /// max|ΩᴴΩ − I|, entrywise modulus.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.omega.nrows();
        let gram = self.omega.adjoint() * &self.omega;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let target = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::ZERO };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// max|Ω − Ωᵀ|, entrywise modulus.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.omega.nrows();
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                worst = worst.max((self.omega[(i, j)] - self.omega[(j, i)]).norm());
            }
        }
        worst
    }
}

/// One codebook entry: a phase-shift matrix for the RIS architectures or a
/// unit-norm beamforming vector for the active array.
#[derive(Debug, Clone, PartialEq)]
pub enum Codeword {
    Matrix(PhaseShiftMatrix),
    Vector(DVector<Complex64>),
}

/// Ordered list of codewords, one per pilot time slot, aligned with the
/// sweep targets that produced them.
#[derive(Debug, Clone)]
pub struct Codebook {
    pub scenario: Scenario,
    pub architecture: Architecture,
    pub targets: Vec<SweepTarget>,
    pub entries: Vec<Codeword>,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn inclusive_steps(min: f64, max: f64, step: f64) -> Vec<f64> {
    // a relative fudge keeps endpoints that the step hits up to rounding
    let count = ((max - min) / step + 1e-9).floor() as usize;
    (0..=count).map(|k| min + k as f64 * step).collect()
}

/// Generates the sweep targets: the Cartesian product of the range ladder
/// and the angle fan (near field) or the angle fan alone (far field).
/// Ordering is range-major, angle-minor, both ascending; endpoints are
/// included when the step lands on them.
pub fn sweep_grid(
    geom: &SystemGeometry,
    scenario: Scenario,
    spec: &GridSpec,
    mode: GridMode,
) -> Result<Vec<SweepTarget>> {
    if !(spec.delta_theta_deg > 0.0) {
        return Err(Error::validation(format!(
            "angular step must be positive, got {}",
            spec.delta_theta_deg
        )));
    }
    let thetas: Vec<f64> = inclusive_steps(0.0, 180.0, spec.delta_theta_deg)
        .into_iter()
        .map(|deg| deg.to_radians())
        .collect();
    let mut targets = match scenario {
        Scenario::FarField => thetas.into_iter().map(|theta| SweepTarget::Angle { theta }).collect(),
        Scenario::NearField => {
            if !(spec.delta_r > 0.0) {
                return Err(Error::validation(format!(
                    "range step must be positive, got {}",
                    spec.delta_r
                )));
            }
            if spec.rho_min > spec.rho_max {
                return Err(Error::validation(format!(
                    "range window is empty: rho_min = {} > rho_max = {}",
                    spec.rho_min, spec.rho_max
                )));
            }
            let (lower, upper) = geom.fresnel_bounds();
            if !(spec.rho_min > lower) || !(spec.rho_max < upper) {
                return Err(Error::validation(format!(
                    "near-field sweep window [{}, {}] must lie strictly inside the Fresnel \
                     region ({lower:.4}, {upper:.4})",
                    spec.rho_min, spec.rho_max
                )));
            }
            let ranges = inclusive_steps(spec.rho_min, spec.rho_max, spec.delta_r);
            let mut t = Vec::with_capacity(ranges.len() * thetas.len());
            for &r in &ranges {
                for &theta in &thetas {
                    t.push(SweepTarget::Point { r, theta });
                }
            }
            t
        }
    };
    if let GridMode::Truncate(keep) = mode {
        if keep > targets.len() {
            return Err(Error::validation(format!(
                "cannot truncate a {}-target grid to {keep}",
                targets.len()
            )));
        }
        targets.truncate(keep);
    }
    Ok(targets)
}

fn check_unit(name: &str, v: &DVector<Complex64>) -> Result<()> {
    let norm = v.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::validation(format!(
            "{name} must be unit-norm (|{name}| = {norm})"
        )));
    }
    Ok(())
}

/// Takagi factor of A = u_R·u_Tᴴ + (u_R·u_Tᴴ)ᵀ: returns (Q, σ) with
/// A = Q·diag(σ)·Qᵀ and Q unitary. σ is descending with entries
/// 1 ± |u_Rᵀu_T| followed by exact zeros (A has rank ≤ 2).
///
/// Because the rank is known, A is first compressed onto an orthonormal
/// basis B of its range span{u_R, u_T*}, where C = BᴴAB* is a small complex
/// symmetric matrix whose Takagi factor is computed by the SVD route
/// C = UΣVᴴ, ν = diag(UᴴV*), Q_c = U·diag(e^{j∠ν/2}); a degenerate pair of
/// singular values (u_Rᵀu_T = 0) makes UᴴV* block two-dimensional rather
/// than diagonal, and U is then repaired with a factor W satisfying
/// W·Wᵀ = UᴴV* before the phases of that block are pinned to zero. The
/// remaining columns of Q are a deterministic Gram-Schmidt completion of B
/// from the standard basis. Applying an iterative SVD to the full M×M
/// matrix instead loses up to six digits on the heavily rank-deficient A.
pub fn takagi_factor(
    u_t: &DVector<Complex64>,
    u_r: &DVector<Complex64>,
) -> Result<(DMatrix<Complex64>, DVector<f64>)> {
    if u_t.len() != u_r.len() {
        return Err(Error::validation(format!(
            "steering vectors disagree in length ({} vs {})",
            u_t.len(),
            u_r.len()
        )));
    }
    check_unit("u_T", u_t)?;
    check_unit("u_R", u_r)?;
    let m = u_t.len();

    let u_t_conj = u_t.map(|z| z.conj());
    let mut range_basis: Vec<DVector<Complex64>> = vec![u_r.clone()];
    if let Some(b2) = orthonormal_residual(&range_basis, &u_t_conj, 1e-8) {
        range_basis.push(b2);
    }
    let k = range_basis.len();
    let b = DMatrix::from_columns(&range_basis.iter().map(|v| v.column(0)).collect::<Vec<_>>());

    // C = Bᴴ·A·B* assembled from the two rank-one terms of A
    let b_conj = b.map(|z| z.conj());
    let row_t = u_t.adjoint() * &b_conj;
    let row_r = u_r.transpose() * &b_conj;
    let col_r = b.adjoint() * u_r;
    let col_t = b.adjoint() * &u_t_conj;
    let c = &col_r * row_t + &col_t * row_r;
    let c = (&c + c.transpose()) * Complex64::new(0.5, 0.0);

    let (q_small, sigma_small) = takagi_of_symmetric(&c)?;

    let mut q = DMatrix::<Complex64>::zeros(m, m);
    let range_cols = &b * q_small;
    for j in 0..k {
        q.set_column(j, &range_cols.column(j));
    }
    let mut filled = k;
    let one = Complex64::new(1.0, 0.0);
    for pass in 0..2 {
        let tol = if pass == 0 { 0.5 } else { 1e-3 };
        for idx in 0..m {
            if filled == m {
                break;
            }
            let mut w = DVector::<Complex64>::zeros(m);
            w[idx] = one;
            {
                let block = q.columns(0, filled);
                for _ in 0..2 {
                    let coeff = block.ad_mul(&w);
                    w.gemv(-one, &block, &coeff.column(0), one);
                }
            }
            let norm = w.norm();
            if norm > tol {
                w *= Complex64::new(1.0 / norm, 0.0);
                q.set_column(filled, &w);
                filled += 1;
            }
        }
    }
    if filled != m {
        return Err(Error::numerical(
            "failed to complete the Takagi basis to a unitary matrix".to_string(),
        ));
    }

    let mut sigma = DVector::<f64>::zeros(m);
    for j in 0..k {
        sigma[j] = sigma_small[j];
    }
    Ok((q, sigma))
}

/// Orthonormalizes `v` against `basis` with two Gram-Schmidt passes;
/// returns the unit residual, or None when its norm falls at or below
/// `tol`.
fn orthonormal_residual(
    basis: &[DVector<Complex64>],
    v: &DVector<Complex64>,
    tol: f64,
) -> Option<DVector<Complex64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let coeff = b.dotc(&w);
            w.axpy(-coeff, b, Complex64::new(1.0, 0.0));
        }
    }
    let norm = w.norm();
    if norm > tol {
        Some(w * Complex64::new(1.0 / norm, 0.0))
    } else {
        None
    }
}

/// Takagi factor of a small complex symmetric matrix via its SVD:
/// returns (Q, σ) with C = Q·diag(σ)·Qᵀ, σ descending.
fn takagi_of_symmetric(c: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DVector<f64>)> {
    let k = c.nrows();
    let mut svd = c.clone().svd(true, true);
    svd.sort_by_singular_values();
    let mut u = svd.u.ok_or_else(|| Error::numerical("SVD did not produce U"))?;
    let v_t = svd.v_t.ok_or_else(|| Error::numerical("SVD did not produce V"))?;
    let sigma = svd.singular_values;

    // C = U·Σ·Vᴴ with v_t = Vᴴ, so V* = v_t.transpose()
    let z = u.adjoint() * v_t.transpose();

    let cluster_tol = 1e-6 * sigma[0].max(1.0);
    let mut phases = vec![0.0_f64; k];
    let mut start = 0;
    for end in 1..=k {
        if end < k && (sigma[start] - sigma[end]).abs() <= cluster_tol {
            continue;
        }
        if sigma[start] <= cluster_tol || end - start == 1 {
            for j in start..end {
                let nu = z[(j, j)];
                phases[j] = if nu.norm() == 0.0 { 0.0 } else { nu.arg() / 2.0 };
            }
        } else {
            repair_degenerate_cluster(&mut u, &z, start, end);
            // phases stay zero on the repaired columns
        }
        start = end;
    }

    for (j, &phi) in phases.iter().enumerate() {
        if phi != 0.0 {
            let rot = Complex64::cis(phi);
            for i in 0..k {
                u[(i, j)] *= rot;
            }
        }
    }
    Ok((u, sigma))
}

/// Replaces U[:, start..end] by U[:, start..end]·W where W·Wᵀ equals the
/// symmetric unitary coupling block Z_b. W comes from simultaneously
/// diagonalizing the commuting real and imaginary parts of Z_b:
/// Z_b = O·diag(e^{jα})·Oᵀ with O real orthogonal, W = O·diag(e^{jα/2}).
fn repair_degenerate_cluster(
    u: &mut DMatrix<Complex64>,
    z: &DMatrix<Complex64>,
    start: usize,
    end: usize,
) {
    let k = end - start;
    let mut zb = DMatrix::<Complex64>::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let avg = (z[(start + i, start + j)] + z[(start + j, start + i)]) * 0.5;
            zb[(i, j)] = avg;
        }
    }
    let x = zb.map(|c| c.re);
    let y = zb.map(|c| c.im);

    let eig = nalgebra::SymmetricEigen::new(x);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut o = DMatrix::<f64>::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        o.set_column(dst, &eig.eigenvectors.column(src));
    }
    let sorted_vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    // within each repeated-eigenvalue group of X, rotate O to diagonalize Y too
    let mut g0 = 0;
    for g1 in 1..=k {
        if g1 < k && (sorted_vals[g1] - sorted_vals[g0]).abs() <= 1e-9 {
            continue;
        }
        if g1 - g0 > 1 {
            let og = o.columns(g0, g1 - g0).into_owned();
            let yp = og.transpose() * &y * &og;
            let yp = (&yp + yp.transpose()) * 0.5;
            let sub = nalgebra::SymmetricEigen::new(yp);
            let rotated = og * sub.eigenvectors;
            for (offset, col) in (g0..g1).enumerate() {
                o.set_column(col, &rotated.column(offset));
            }
        }
        g0 = g1;
    }

    let oc = o.map(|x| Complex64::new(x, 0.0));
    let alpha_mat = oc.transpose() * &zb * &oc;
    let mut w = oc;
    for j in 0..k {
        let half = Complex64::cis(alpha_mat[(j, j)].arg() / 2.0);
        for i in 0..k {
            w[(i, j)] *= half;
        }
    }

    let block = u.columns(start, k).into_owned();
    let repaired = block * w;
    for (offset, col) in (start..end).enumerate() {
        u.set_column(col, &repaired.column(offset));
    }
}

/// Fully-connected BD-RIS codeword Ω = Q·Qᵀ from the Takagi factor of the
/// matching matrix for (u_T, u_R). The result is verified symmetric, and
/// unitary through its action on a dense probe vector, before being
/// returned.
pub fn takagi_codeword(
    u_t: &DVector<Complex64>,
    u_r: &DVector<Complex64>,
) -> Result<PhaseShiftMatrix> {
    let (q, _) = takagi_factor(u_t, u_r)?;
    let m = q.nrows();
    let omega = &q * q.transpose();
    let psm = PhaseShiftMatrix {
        omega,
        architecture: Architecture::BdRis,
        flagged_zero_entries: 0,
    };
    let scale = 1.0 / (m as f64).sqrt();
    let probe = DVector::<Complex64>::from_fn(m, |i, _| {
        Complex64::cis(2.399963229728653 * i as f64) * scale
    });
    let unitarity = (psm.omega().ad_mul(&(psm.omega() * &probe)) - &probe).norm();
    if unitarity >= 1e-10 {
        return Err(Error::numerical(format!(
            "constructed codeword violates unitarity (probe defect {unitarity:.3e})"
        )));
    }
    let symmetry = psm.symmetry_defect();
    if symmetry >= 1e-12 {
        return Err(Error::numerical(format!(
            "constructed codeword violates symmetry (defect {symmetry:.3e})"
        )));
    }
    Ok(psm)
}

/// Single-connected D-RIS codeword: Ω = diag(e^{−j·arg(u_T ⊙ u_R*)}).
/// Entries whose phase is undefined (zero product) are pinned to phase 0
/// and counted in `flagged_zero_entries`.
pub fn dris_codeword(
    u_t: &DVector<Complex64>,
    u_r: &DVector<Complex64>,
) -> Result<PhaseShiftMatrix> {
    if u_t.len() != u_r.len() {
        return Err(Error::validation(format!(
            "steering vectors disagree in length ({} vs {})",
            u_t.len(),
            u_r.len()
        )));
    }
    check_unit("u_T", u_t)?;
    check_unit("u_R", u_r)?;
    let m = u_t.len();
    let mut omega = DMatrix::<Complex64>::zeros(m, m);
    let mut flagged = 0;
    for i in 0..m {
        let product = u_t[i] * u_r[i].conj();
        let phase = if product.norm() == 0.0 {
            flagged += 1;
            0.0
        } else {
            -product.arg()
        };
        omega[(i, i)] = Complex64::cis(phase);
    }
    Ok(PhaseShiftMatrix {
        omega,
        architecture: Architecture::DRis,
        flagged_zero_entries: flagged,
    })
}

/// Active-array codeword: the target steering vector itself (already
/// unit-norm).
pub fn aaa_codeword(u_r: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    check_unit("u_R", u_r)?;
    Ok(u_r.clone())
}

/// Receive-side steering vector for one sweep target.
pub fn target_steering(
    geom: &SystemGeometry,
    scenario: Scenario,
    target: &SweepTarget,
) -> Result<DVector<Complex64>> {
    match (scenario, target) {
        (Scenario::NearField, SweepTarget::Point { r, theta }) => {
            Ok(nf_steering(geom, *r, *theta)?.into_entries())
        }
        (Scenario::FarField, SweepTarget::Angle { theta }) => {
            Ok(ff_steering(geom, *theta).into_entries())
        }
        _ => Err(Error::validation(
            "sweep target kind does not match the scenario".to_string(),
        )),
    }
}

/// Builds the full codebook for one architecture: computes
/// u_T = g[0]/‖g[0]‖ once, then one codeword per sweep target, in target
/// order. Entries are constructed in parallel when a multi-threaded rayon
/// pool is installed; each entry is bitwise deterministic either way.
pub fn build_codebook(
    geom: &SystemGeometry,
    scenario: Scenario,
    architecture: Architecture,
    spec: &GridSpec,
    mode: GridMode,
) -> Result<Codebook> {
    let targets = sweep_grid(geom, scenario, spec, mode)?;
    // n = 0 makes the subcarrier spacing irrelevant to g[0]
    let g0 = bs_ris_channel(geom, 0, 1.0)?;
    let u_t = g0.entries() * Complex64::new(1.0 / g0.norm(), 0.0);
    let entries: Result<Vec<Codeword>> = targets
        .par_iter()
        .map(|target| {
            let u_r = target_steering(geom, scenario, target)?;
            Ok(match architecture {
                Architecture::BdRis => Codeword::Matrix(takagi_codeword(&u_t, &u_r)?),
                Architecture::DRis => Codeword::Matrix(dris_codeword(&u_t, &u_r)?),
                Architecture::Aaa => Codeword::Vector(aaa_codeword(&u_r)?),
            })
        })
        .collect();
    Ok(Codebook { scenario, architecture, targets, entries: entries? })
}

/// Serializable mirror of a codebook: matrices row-major as [re, im] pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct CodebookExport {
    pub architecture: String,
    pub scenario: String,
    pub targets: Vec<SweepTarget>,
    pub entries: Vec<CodewordExport>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CodewordExport {
    Matrix { rows: Vec<Vec<[f64; 2]>> },
    Vector { entries: Vec<[f64; 2]> },
}

impl Codebook {
    pub fn export(&self) -> CodebookExport {
        let entries = self
            .entries
            .iter()
            .map(|entry| match entry {
                Codeword::Matrix(psm) => {
                    let omega = psm.omega();
                    let rows = (0..omega.nrows())
                        .map(|i| {
                            (0..omega.ncols()).map(|j| [omega[(i, j)].re, omega[(i, j)].im]).collect()
                        })
                        .collect();
                    CodewordExport::Matrix { rows }
                }
                Codeword::Vector(f) => CodewordExport::Vector {
                    entries: f.iter().map(|z| [z.re, z.im]).collect(),
                },
            })
            .collect();
        CodebookExport {
            architecture: self.architecture.label().to_string(),
            scenario: self.scenario.label().to_string(),
            targets: self.targets.clone(),
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_random(m: usize, seed: u64) -> DVector<Complex64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let v = DVector::from_fn(m, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let scale = Complex64::new(1.0 / v.norm(), 0.0);
        v * scale
    }

    fn gain(
        u_r: &DVector<Complex64>,
        omega: &DMatrix<Complex64>,
        u_t: &DVector<Complex64>,
    ) -> f64 {
        (u_r.adjoint() * omega * u_t)[(0, 0)].norm()
    }

    #[test]
    fn grid_counts_for_standard_spec() {
        let g = SystemGeometry::standard();
        let nf = sweep_grid(&g, Scenario::NearField, &GridSpec::default(), GridMode::Literal)
            .unwrap();
        assert_eq!(nf.len(), 505);
        let ff =
            sweep_grid(&g, Scenario::FarField, &GridSpec::default(), GridMode::Literal).unwrap();
        assert_eq!(ff.len(), 101);
        let nf_cut =
            sweep_grid(&g, Scenario::NearField, &GridSpec::default(), GridMode::Truncate(500))
                .unwrap();
        assert_eq!(nf_cut.len(), 500);
    }

    #[test]
    fn coarse_ff_grid_has_three_points() {
        let g = SystemGeometry::standard();
        let spec = GridSpec { delta_theta_deg: 90.0, ..GridSpec::default() };
        let ff = sweep_grid(&g, Scenario::FarField, &spec, GridMode::Literal).unwrap();
        assert_eq!(ff.len(), 3);
        let expected = [0.0, 90.0_f64.to_radians(), std::f64::consts::PI];
        for (t, e) in ff.iter().zip(expected) {
            assert_relative_eq!(t.theta(), e, epsilon = 1e-12);
        }
    }

    #[test]
    fn nf_grid_outside_fresnel_window_errors() {
        let g = SystemGeometry::standard();
        let spec = GridSpec { rho_min: 1.0, ..GridSpec::default() };
        assert!(sweep_grid(&g, Scenario::NearField, &spec, GridMode::Literal).is_err());
        let spec = GridSpec { rho_max: 60.0, ..GridSpec::default() };
        assert!(sweep_grid(&g, Scenario::NearField, &spec, GridMode::Literal).is_err());
    }

    #[test]
    fn takagi_uniform_vectors_reach_unit_gain() {
        let m = 16;
        let u = DVector::from_element(m, Complex64::new(1.0 / (m as f64).sqrt(), 0.0));
        let psm = takagi_codeword(&u, &u).unwrap();
        assert!((gain(&u, psm.omega(), &u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn takagi_two_element_swap() {
        // u_T = e1, u_R = e2: a degenerate pair of unit singular values
        let u_t = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::ZERO]);
        let u_r = DVector::from_vec(vec![Complex64::ZERO, Complex64::new(1.0, 0.0)]);
        let psm = takagi_codeword(&u_t, &u_r).unwrap();
        let mapped = psm.omega() * &u_t;
        assert!(mapped[0].norm() < 1e-10, "e1 component should vanish, got {}", mapped[0]);
        assert_relative_eq!(mapped[1].norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn takagi_codewords_are_unitary_and_symmetric() {
        for seed in 0..8 {
            let u_t = unit_random(24, seed);
            let u_r = unit_random(24, 100 + seed);
            let psm = takagi_codeword(&u_t, &u_r).unwrap();
            assert!(psm.unitarity_defect() < 1e-10);
            assert!(psm.symmetry_defect() < 1e-12);
            assert!(gain(&u_r, psm.omega(), &u_t) >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn takagi_reconstruction_holds() {
        for seed in 0..4 {
            let u_t = unit_random(12, seed);
            let u_r = unit_random(12, 50 + seed);
            let (q, sigma) = takagi_factor(&u_t, &u_r).unwrap();
            let outer = &u_r * u_t.adjoint();
            let a = &outer + outer.transpose();
            let recon = &q * DMatrix::from_diagonal(&sigma.map(|s| Complex64::new(s, 0.0)))
                * q.transpose();
            let defect = (&a - recon).iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
            assert!(defect < 1e-9, "reconstruction defect {defect:.3e}");
        }
    }

    #[test]
    fn takagi_handles_forced_degeneracy() {
        // u_R^T u_T = 0 makes both nonzero singular values equal
        for seed in 0..4 {
            let u_t = unit_random(16, seed);
            let mut u_r = unit_random(16, 200 + seed);
            let transpose_overlap: Complex64 =
                u_r.iter().zip(u_t.iter()).map(|(a, b)| a * b).sum();
            for i in 0..16 {
                let correction = transpose_overlap * u_t[i].conj();
                u_r[i] -= correction;
            }
            let scale = Complex64::new(1.0 / u_r.norm(), 0.0);
            u_r *= scale;
            let check: Complex64 = u_r.iter().zip(u_t.iter()).map(|(a, b)| a * b).sum();
            assert!(check.norm() < 1e-12, "construction failed: overlap {}", check.norm());
            let psm = takagi_codeword(&u_t, &u_r).unwrap();
            let g = gain(&u_r, psm.omega(), &u_t);
            assert!(g >= 1.0 - 1e-8, "degenerate gain {g}");
        }
    }

    #[test]
    fn takagi_singular_values_are_one_plus_minus_overlap() {
        let u_t = unit_random(20, 3);
        let u_r = unit_random(20, 33);
        let (_, sigma) = takagi_factor(&u_t, &u_r).unwrap();
        let overlap: Complex64 = u_r.iter().zip(u_t.iter()).map(|(a, b)| a * b).sum();
        assert_relative_eq!(sigma[0], 1.0 + overlap.norm(), epsilon = 1e-10);
        assert_relative_eq!(sigma[1], 1.0 - overlap.norm(), epsilon = 1e-10);
        for k in 2..20 {
            assert!(sigma[k] < 1e-10);
        }
    }

    #[test]
    fn dris_identity_when_vectors_match() {
        let u = unit_random(10, 7);
        let psm = dris_codeword(&u, &u).unwrap();
        for i in 0..10 {
            assert_relative_eq!(psm.omega()[(i, i)].re, 1.0, epsilon = 1e-12);
            assert_relative_eq!(psm.omega()[(i, i)].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dris_diagonal_is_unit_modulus() {
        let u_t = unit_random(32, 1);
        let u_r = unit_random(32, 2);
        let psm = dris_codeword(&u_t, &u_r).unwrap();
        for i in 0..32 {
            assert_relative_eq!(psm.omega()[(i, i)].norm(), 1.0, epsilon = 1e-12);
            for j in 0..32 {
                if i != j {
                    assert_eq!(psm.omega()[(i, j)], Complex64::ZERO);
                }
            }
        }
        assert_eq!(psm.flagged_zero_entries(), 0);
    }

    #[test]
    fn dris_zero_entry_is_flagged_and_pinned() {
        let mut u_t = unit_random(4, 9);
        u_t[2] = Complex64::ZERO;
        let scale = Complex64::new(1.0 / u_t.norm(), 0.0);
        u_t *= scale;
        let u_r = unit_random(4, 10);
        let psm = dris_codeword(&u_t, &u_r).unwrap();
        assert_eq!(psm.flagged_zero_entries(), 1);
        assert_eq!(psm.omega()[(2, 2)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn bd_dominates_d_at_the_matched_target() {
        let geom = SystemGeometry::standard();
        let g0 = bs_ris_channel(&geom, 0, 120.0e3).unwrap();
        let u_t = g0.entries() * Complex64::new(1.0 / g0.norm(), 0.0);
        for theta_deg in [10.0_f64, 60.0, 90.0, 140.0] {
            let u_r = nf_steering(&geom, 12.0, theta_deg.to_radians())
                .unwrap()
                .into_entries();
            let bd = takagi_codeword(&u_t, &u_r).unwrap();
            let d = dris_codeword(&u_t, &u_r).unwrap();
            let g_bd = gain(&u_r, bd.omega(), &u_t);
            let g_d = gain(&u_r, d.omega(), &u_t);
            assert!(g_bd >= g_d - 1e-12, "bd {g_bd} < d {g_d} at {theta_deg} deg");
            assert!(g_bd >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn codeword_is_power_lossless() {
        let u_t = unit_random(16, 21);
        let u_r = unit_random(16, 22);
        let psm = takagi_codeword(&u_t, &u_r).unwrap();
        for seed in 0..100 {
            let x = unit_random(16, 1000 + seed);
            let y = psm.omega() * &x;
            assert_relative_eq!(y.norm(), x.norm(), epsilon = 1e-10);
        }
    }

    #[test]
    fn aaa_codebook_ignores_feed_distance() {
        let spec = GridSpec::default();
        let near = SystemGeometry::standard();
        let far = SystemGeometry::standard_with_dc_lambda(50.0).unwrap();
        let cb_near =
            build_codebook(&near, Scenario::FarField, Architecture::Aaa, &spec, GridMode::Literal)
                .unwrap();
        let cb_far =
            build_codebook(&far, Scenario::FarField, Architecture::Aaa, &spec, GridMode::Literal)
                .unwrap();
        for (a, b) in cb_near.entries.iter().zip(cb_far.entries.iter()) {
            match (a, b) {
                (Codeword::Vector(x), Codeword::Vector(y)) => assert_eq!(x, y),
                _ => panic!("AAA codebooks must hold vectors"),
            }
        }
    }

    #[test]
    fn codebooks_share_targets_across_architectures() {
        let geom = SystemGeometry::standard();
        let spec = GridSpec { delta_theta_deg: 18.0, ..GridSpec::default() };
        let bd = build_codebook(&geom, Scenario::FarField, Architecture::BdRis, &spec, GridMode::Literal)
            .unwrap();
        let d = build_codebook(&geom, Scenario::FarField, Architecture::DRis, &spec, GridMode::Literal)
            .unwrap();
        assert_eq!(bd.targets.len(), d.targets.len());
        for (x, y) in bd.targets.iter().zip(d.targets.iter()) {
            assert_eq!(x.theta(), y.theta());
        }
    }

    #[test]
    fn aaa_beam_peak_lands_on_its_target() {
        let geom = SystemGeometry::standard();
        let theta0 = 70.0_f64.to_radians();
        let f = aaa_codeword(&ff_steering(&geom, theta0).into_entries()).unwrap();
        let mut best = (0.0, -1.0);
        for i in 0..=3600 {
            let theta = i as f64 / 3600.0 * std::f64::consts::PI;
            let a = ff_steering(&geom, theta);
            let response = (a.entries().adjoint() * &f)[(0, 0)].norm();
            if response > best.1 {
                best = (theta, response);
            }
        }
        assert!((best.0 - theta0).abs() <= std::f64::consts::PI / 3600.0 + 1e-12);
    }
}
