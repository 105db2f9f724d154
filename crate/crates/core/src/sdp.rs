//! Primal-dual interior-point solver for small dense complex semidefinite
//! programs in dual form
//!
//! ```text
//! minimize    cᵀy
//! subject to  Z_b(y) = C_b + Σ_i y_i A_{b,i} ⪰ 0     for every block b,
//! ```
//!
//! with `y` real and every `A_{b,i}` Hermitian. The conjugate problem is
//! `maximize −Σ⟨C_b, X_b⟩` over `X_b ⪰ 0` with `Σ_b ⟨A_{b,i}, X_b⟩ = c_i`.
//!
//! Search directions are HKM with a Mehrotra predictor-corrector. Blocks come
//! in three kinds: nonnegative scalars (`Linear`), matrices with sparse
//! coefficients (`Sparse`) and matrices of the form `C + s·FᴴU F + Σ y_e D_e`
//! where `U` is a Hermitian matrix variable (`Congruence`), whose Schur
//! complement is assembled without forming the `L²` coefficient matrices.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result, SolverDiagnostics};
use crate::linalg::{hermitian_eigen, hermitian_part};
use crate::{CMat, C64};

/// Real parametrization of an `L×L` Hermitian matrix by `L²` consecutive
/// variables: the diagonal, then real and imaginary parts of each `(a, b)`,
/// `a < b`, in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianParam {
    pub offset: usize,
    pub dim: usize,
    basis: Vec<[(usize, usize, C64); 2]>,
    terms: Vec<u8>,
}

impl HermitianParam {
    pub fn new(offset: usize, dim: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let mut basis = Vec::with_capacity(dim * dim);
        let mut terms = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            basis.push([(a, a, one), (a, a, C64::new(0.0, 0.0))]);
            terms.push(1);
        }
        for a in 0..dim {
            for b in a + 1..dim {
                basis.push([(a, b, one), (b, a, one)]);
                terms.push(2);
                basis.push([(a, b, i), (b, a, -i)]);
                terms.push(2);
            }
        }
        HermitianParam { offset, dim, basis, terms }
    }

    pub fn len(&self) -> usize {
        self.dim * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Nonzero entries of basis matrix `k`.
    pub fn entries(&self, k: usize) -> &[(usize, usize, C64)] {
        &self.basis[k][..self.terms[k] as usize]
    }

    /// Hermitian matrix from the parameter slice `y[offset..offset+L²]`.
    pub fn assemble(&self, y: &[f64]) -> CMat {
        let mut u = CMat::zeros(self.dim, self.dim);
        for k in 0..self.len() {
            let v = y[self.offset + k];
            for &(a, b, c) in self.entries(k) {
                u[(a, b)] += c * v;
            }
        }
        u
    }

    /// Parameters of a Hermitian matrix (inverse of [`assemble`](Self::assemble)).
    pub fn vectorize(&self, u: &CMat) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for a in 0..self.dim {
            out.push(u[(a, a)].re);
        }
        for a in 0..self.dim {
            for b in a + 1..self.dim {
                out.push(u[(a, b)].re);
                out.push(u[(a, b)].im);
            }
        }
        out
    }

    /// `⟨B_k, Y⟩ = Re Tr(B_k Y)` for every basis matrix.
    fn project(&self, y: &CMat, scale: f64, out: &mut [f64]) {
        for k in 0..self.len() {
            let mut s = 0.0;
            for &(a, b, c) in self.entries(k) {
                s += (c * y[(b, a)]).re;
            }
            out[self.offset + k] += scale * s;
        }
    }
}

/// Scalar constraints `z_r = c_r + Σ_i g_{r,i} y_i ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearBlock {
    pub constant: Vec<f64>,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl LinearBlock {
    pub fn push(&mut self, constant: f64, row: Vec<(usize, f64)>) -> usize {
        self.constant.push(constant);
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Matrix block `C + Σ_i y_i A_i` with each `A_i` given by its nonzero entries
/// (both triangles).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBlock {
    pub constant: CMat,
    pub coeffs: Vec<(usize, Vec<(usize, usize, C64)>)>,
}

/// Matrix block `C + s·FᴴU(y)F + Σ_e y_e D_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceBlock {
    pub constant: CMat,
    pub param: HermitianParam,
    pub scale: f64,
    /// `F`, of size `L×n`.
    pub frame: CMat,
    pub extras: Vec<(usize, CMat)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixBlock {
    Sparse(SparseBlock),
    Congruence(CongruenceBlock),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub linear: LinearBlock,
    pub blocks: Vec<MatrixBlock>,
}

impl MatrixBlock {
    pub fn dim(&self) -> usize {
        match self {
            MatrixBlock::Sparse(b) => b.constant.nrows(),
            MatrixBlock::Congruence(b) => b.constant.nrows(),
        }
    }

    pub fn constant(&self) -> &CMat {
        match self {
            MatrixBlock::Sparse(b) => &b.constant,
            MatrixBlock::Congruence(b) => &b.constant,
        }
    }

    /// `Σ_i y_i A_i` without the constant.
    pub fn apply(&self, y: &[f64]) -> CMat {
        match self {
            MatrixBlock::Sparse(b) => {
                let mut z = CMat::zeros(b.constant.nrows(), b.constant.ncols());
                for (i, entries) in &b.coeffs {
                    for &(r, c, v) in entries {
                        z[(r, c)] += v * y[*i];
                    }
                }
                z
            }
            MatrixBlock::Congruence(b) => {
                let u = b.param.assemble(y);
                let mut z = b.frame.adjoint() * u * &b.frame * C64::new(b.scale, 0.0);
                for (i, d) in &b.extras {
                    z += d * C64::new(y[*i], 0.0);
                }
                z
            }
        }
    }

    /// Adds `Re Tr(A_i X)` to `out[i]`.
    pub fn adjoint(&self, x: &CMat, out: &mut [f64]) {
        match self {
            MatrixBlock::Sparse(b) => {
                for (i, entries) in &b.coeffs {
                    let mut s = 0.0;
                    for &(r, c, v) in entries {
                        s += (v * x[(c, r)]).re;
                    }
                    out[*i] += s;
                }
            }
            MatrixBlock::Congruence(b) => {
                let p = &b.frame * x * b.frame.adjoint();
                b.param.project(&p, b.scale, out);
                for (i, d) in &b.extras {
                    out[*i] += crate::linalg::re_trace_product(d, x);
                }
            }
        }
    }

    /// Adds the block's HKM Schur contributions `Re Tr(A_i X A_j Z⁻¹)`.
    fn schur(&self, x: &CMat, zinv: &CMat, m: &mut DMatrix<f64>) {
        match self {
            MatrixBlock::Sparse(b) => sparse_schur(b, x, zinv, m),
            MatrixBlock::Congruence(b) => congruence_schur(b, x, zinv, m),
        }
    }

    /// Dense coefficient matrix of variable `i` in this block, if it appears.
    pub fn coefficient(&self, i: usize) -> Option<CMat> {
        match self {
            MatrixBlock::Sparse(b) => b.coeffs.iter().find(|(v, _)| *v == i).map(|(_, e)| {
                let mut a = CMat::zeros(b.constant.nrows(), b.constant.ncols());
                for &(r, c, v) in e {
                    a[(r, c)] += v;
                }
                a
            }),
            MatrixBlock::Congruence(b) => {
                if i >= b.param.offset && i < b.param.offset + b.param.len() {
                    let mut y = vec![0.0; b.param.offset + b.param.len()];
                    y[i] = 1.0;
                    let u = b.param.assemble(&y);
                    Some(b.frame.adjoint() * u * &b.frame * C64::new(b.scale, 0.0))
                } else {
                    b.extras.iter().find(|(v, _)| *v == i).map(|(_, d)| d.clone())
                }
            }
        }
    }
}

fn sparse_schur(b: &SparseBlock, x: &CMat, zinv: &CMat, m: &mut DMatrix<f64>) {
    let n = b.constant.nrows();
    // Positions (r, c) of every A_i entry; G_j is needed at the transposes.
    let mut needed: Vec<(usize, usize)> =
        b.coeffs.iter().flat_map(|(_, e)| e.iter().map(|&(r, c, _)| (c, r))).collect();
    needed.sort_unstable();
    needed.dedup();
    let lookup = |pos: (usize, usize)| needed.binary_search(&pos).expect("support entry");
    for (j, ej) in &b.coeffs {
        // T = X A_j, then G_j = T Z⁻¹ on the needed positions.
        let mut t = CMat::zeros(n, n);
        for &(r, c, v) in ej {
            for row in 0..n {
                t[(row, c)] += x[(row, r)] * v;
            }
        }
        let g: Vec<C64> = needed
            .iter()
            .map(|&(row, col)| (0..n).map(|k| t[(row, k)] * zinv[(k, col)]).sum())
            .collect();
        for (i, ei) in &b.coeffs {
            let s: f64 = ei.iter().map(|&(r, c, v)| (v * g[lookup((c, r))]).re).sum();
            m[(*i, *j)] += s;
        }
    }
}

fn congruence_schur(b: &CongruenceBlock, x: &CMat, zinv: &CMat, m: &mut DMatrix<f64>) {
    let f = &b.frame;
    let p = f * x * f.adjoint();
    let w = f * zinv * f.adjoint();
    let s2 = b.scale * b.scale;
    let o = b.param.offset;
    let nu = b.param.len();
    for i in 0..nu {
        let ei = b.param.entries(i);
        for j in 0..=i {
            let ej = b.param.entries(j);
            let mut acc = C64::new(0.0, 0.0);
            for &(a, bb, c1) in ei {
                for &(c, d, c2) in ej {
                    acc += c1 * c2 * p[(bb, c)] * w[(d, a)];
                }
            }
            let v = s2 * acc.re;
            m[(o + i, o + j)] += v;
            if i != j {
                m[(o + j, o + i)] += v;
            }
        }
    }
    for (e, d) in &b.extras {
        // Re Tr(D_e X sFᴴB_iF Z⁻¹) = s ⟨B_i, F Z⁻¹ D_e X Fᴴ⟩.
        let y = f * zinv * d * x * f.adjoint();
        let mut col = vec![0.0; o + nu];
        b.param.project(&y, b.scale, &mut col);
        for i in 0..nu {
            m[(*e, o + i)] += col[o + i];
            m[(o + i, *e)] += col[o + i];
        }
        let xd = x * d;
        for (g, dg) in &b.extras {
            let t = &xd * zinv;
            m[(*e, *g)] += crate::linalg::re_trace_product(dg, &t);
        }
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    /// Relative duality gap target.
    pub tolerance: f64,
    /// Relative primal and dual residual target.
    pub feasibility_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        SdpSettings { tolerance: 1e-8, feasibility_tolerance: 1e-7, max_iterations: 200 }
    }
}

/// Optimal iterate.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    pub z_linear: Vec<f64>,
    pub z_blocks: Vec<CMat>,
    pub x_linear: Vec<f64>,
    pub x_blocks: Vec<CMat>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

/// Normalized Farkas certificate `X ⪰ 0`, `⟨C, X⟩ = −1`, `L*(X) ≈ 0`, proving
/// that no `y` makes every block PSD.
#[derive(Debug, Clone)]
pub struct InfeasibilityCertificate {
    pub x_linear: Vec<f64>,
    pub x_blocks: Vec<CMat>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub enum SdpOutcome {
    Optimal(SdpSolution),
    Infeasible(InfeasibilityCertificate),
}

struct Iterate {
    y: Vec<f64>,
    xl: Vec<f64>,
    zl: Vec<f64>,
    xb: Vec<CMat>,
    zb: Vec<CMat>,
}

impl SdpProblem {
    pub fn new(num_vars: usize, objective: Vec<f64>) -> Self {
        SdpProblem { num_vars, objective, linear: LinearBlock::default(), blocks: Vec::new() }
    }

    fn linear_apply(&self, y: &[f64]) -> Vec<f64> {
        self.linear.rows.iter().map(|r| r.iter().map(|&(i, g)| g * y[i]).sum()).collect()
    }

    /// `L*(X)`: `Σ_b ⟨A_{b,i}, X_b⟩` for every variable.
    fn adjoint(&self, xl: &[f64], xb: &[CMat]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars];
        for (r, row) in self.linear.rows.iter().enumerate() {
            for &(i, g) in row {
                out[i] += g * xl[r];
            }
        }
        for (b, x) in self.blocks.iter().zip(xb) {
            b.adjoint(x, &mut out);
        }
        out
    }

    fn const_inner(&self, xl: &[f64], xb: &[CMat]) -> f64 {
        let mut s: f64 = self.linear.constant.iter().zip(xl).map(|(c, x)| c * x).sum();
        for (b, x) in self.blocks.iter().zip(xb) {
            s += crate::linalg::re_trace_product(b.constant(), x);
        }
        s
    }

    fn total_dim(&self) -> usize {
        self.linear.len() + self.blocks.iter().map(|b| b.dim()).sum::<usize>()
    }

    /// Writes the problem in a sparse text format, one nonzero upper-triangle
    /// coefficient per line: `var block row col re im`. Variable `0` is the
    /// constant term and variable `i ≥ 1` is `y_{i−1}`; block `1` holds the
    /// scalar constraints as a diagonal block, blocks `2..` the matrix blocks.
    /// Indices are one-based. A leading comment line carries the objective.
    pub fn write_sparse<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "# objective")?;
        for c in &self.objective {
            write!(w, " {c:.17e}")?;
        }
        writeln!(w)?;
        for (r, c) in self.linear.constant.iter().enumerate() {
            if *c != 0.0 {
                writeln!(w, "0 1 {} {} {:.17e} 0", r + 1, r + 1, c)?;
            }
        }
        for (r, row) in self.linear.rows.iter().enumerate() {
            for &(i, g) in row {
                if g != 0.0 {
                    writeln!(w, "{} 1 {} {} {:.17e} 0", i + 1, r + 1, r + 1, g)?;
                }
            }
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            let emit = |var: usize, a: &CMat, w: &mut W| -> std::io::Result<()> {
                for r in 0..a.nrows() {
                    for c in r..a.ncols() {
                        let v = a[(r, c)];
                        if v.norm() > 0.0 {
                            writeln!(w, "{} {} {} {} {:.17e} {:.17e}", var, bi + 2, r + 1, c + 1, v.re, v.im)?;
                        }
                    }
                }
                Ok(())
            };
            emit(0, b.constant(), &mut w)?;
            for i in 0..self.num_vars {
                if let Some(a) = b.coefficient(i) {
                    emit(i + 1, &a, &mut w)?;
                }
            }
        }
        Ok(())
    }

    pub fn solve(&self, settings: &SdpSettings) -> Result<SdpOutcome> {
        let m = self.num_vars;
        if self.objective.len() != m {
            return Err(Error::DimensionMismatch("objective length".into()));
        }
        let n_total = self.total_dim().max(1) as f64;
        let c_norm = self.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
        let const_norm = (self.linear.constant.iter().map(|v| v * v).sum::<f64>()
            + self.blocks.iter().map(|b| b.constant().norm_squared()).sum::<f64>())
        .sqrt();

        let start = (10f64).max(n_total.sqrt()).max(const_norm).max(c_norm);
        let eye = |n: usize| CMat::identity(n, n) * C64::new(start, 0.0);
        let mut it = Iterate {
            y: vec![0.0; m],
            xl: vec![start; self.linear.len()],
            zl: vec![start; self.linear.len()],
            xb: self.blocks.iter().map(|b| eye(b.dim())).collect(),
            zb: self.blocks.iter().map(|b| eye(b.dim())).collect(),
        };

        let mut diag = SolverDiagnostics {
            iterations: 0,
            relative_gap: f64::INFINITY,
            primal_infeasibility: f64::INFINITY,
            dual_infeasibility: f64::INFINITY,
            mu: f64::INFINITY,
        };
        for iter in 0..settings.max_iterations {
            // Residuals.
            let lin_y = self.linear_apply(&it.y);
            let rdl: Vec<f64> = (0..self.linear.len())
                .map(|r| self.linear.constant[r] + lin_y[r] - it.zl[r])
                .collect();
            let rdb: Vec<CMat> = self
                .blocks
                .iter()
                .zip(&it.zb)
                .map(|(b, z)| b.constant() + b.apply(&it.y) - z)
                .collect();
            let lx = self.adjoint(&it.xl, &it.xb);
            let rp: Vec<f64> = (0..m).map(|i| self.objective[i] - lx[i]).collect();

            let xz: f64 = it.xl.iter().zip(&it.zl).map(|(a, b)| a * b).sum::<f64>()
                + it.xb.iter().zip(&it.zb).map(|(x, z)| crate::linalg::re_trace_product(x, z)).sum::<f64>();
            let mu = xz / n_total;
            let pobj: f64 = self.objective.iter().zip(&it.y).map(|(c, y)| c * y).sum();
            let cx = self.const_inner(&it.xl, &it.xb);
            let dobj = -cx;
            let denom = 1.0 + pobj.abs() + dobj.abs();
            let relgap = ((pobj - dobj).abs()).max(xz.abs()) / denom;
            let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm);
            let dinf = (rdl.iter().map(|v| v * v).sum::<f64>()
                + rdb.iter().map(|r| r.norm_squared()).sum::<f64>())
            .sqrt()
                / (1.0 + const_norm);
            diag = SolverDiagnostics { iterations: iter, relative_gap: relgap, primal_infeasibility: pinf, dual_infeasibility: dinf, mu };

            if relgap <= settings.tolerance
                && pinf <= settings.feasibility_tolerance
                && dinf <= settings.feasibility_tolerance
            {
                return Ok(SdpOutcome::Optimal(SdpSolution {
                    y: it.y,
                    z_linear: it.zl,
                    z_blocks: it.zb,
                    x_linear: it.xl,
                    x_blocks: it.xb,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    relative_gap: relgap,
                    iterations: iter,
                }));
            }
            // Farkas certificate: X ⪰ 0 with ⟨C, X⟩ < 0 and L*(X) small relative to it.
            if cx < 0.0 {
                let lx_norm = lx.iter().map(|v| v * v).sum::<f64>().sqrt();
                let ratio = lx_norm / (-cx);
                if ratio < 1e-8 && dinf > settings.feasibility_tolerance {
                    let s = 1.0 / (-cx);
                    return Ok(SdpOutcome::Infeasible(InfeasibilityCertificate {
                        x_linear: it.xl.iter().map(|v| v * s).collect(),
                        x_blocks: it.xb.iter().map(|x| x * C64::new(s, 0.0)).collect(),
                        residual: ratio,
                    }));
                }
            }

            // Complementarity lost to rounding: further steps only drift.
            if !(mu > 0.0) {
                return Err(Error::NotConverged(diag));
            }

            // Factorizations.
            let zinv_l: Vec<f64> = it.zl.iter().map(|z| 1.0 / z).collect();
            let mut zinv_b = Vec::with_capacity(self.blocks.len());
            for z in &it.zb {
                match crate::linalg::hpd_inverse(z) {
                    Some(inv) => zinv_b.push(hermitian_part(&inv)),
                    None => return Err(Error::NotConverged(diag)),
                }
            }
            let mut schur = DMatrix::<f64>::zeros(m, m);
            for (r, row) in self.linear.rows.iter().enumerate() {
                let w = it.xl[r] * zinv_l[r];
                for &(i, gi) in row {
                    for &(j, gj) in row {
                        schur[(i, j)] += w * gi * gj;
                    }
                }
            }
            for ((b, x), zi) in self.blocks.iter().zip(&it.xb).zip(&zinv_b) {
                b.schur(x, zi, &mut schur);
            }
            let schur = (&schur + schur.transpose()) * 0.5;
            let max_diag = (0..m).map(|i| schur[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
            let chol = match schur.clone().cholesky() {
                Some(c) => c,
                None => {
                    let mut reg = schur.clone();
                    for i in 0..m {
                        reg[(i, i)] += 1e-13 * max_diag;
                    }
                    match reg.cholesky() {
                        Some(c) => c,
                        None => return Err(Error::NotConverged(diag)),
                    }
                }
            };

            let direction = |sigma_mu: f64,
                             corr_l: Option<&[f64]>,
                             corr_b: Option<&[CMat]>|
             -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<CMat>, Vec<CMat>) {
                // Right-hand side blocks R = σμZ⁻¹ − X R_d Z⁻¹ − corr.
                let rl: Vec<f64> = (0..self.linear.len())
                    .map(|r| {
                        sigma_mu * zinv_l[r] - it.xl[r] * rdl[r] * zinv_l[r]
                            - corr_l.map_or(0.0, |c| c[r])
                    })
                    .collect();
                let rb: Vec<CMat> = (0..self.blocks.len())
                    .map(|b| {
                        let mut r = &zinv_b[b] * C64::new(sigma_mu, 0.0) - &it.xb[b] * &rdb[b] * &zinv_b[b];
                        if let Some(c) = corr_b {
                            r -= &c[b];
                        }
                        r
                    })
                    .collect();
                let lr = self.adjoint(&rl, &rb);
                let rhs = nalgebra::DVector::from_iterator(m, (0..m).map(|i| lr[i] - self.objective[i]));
                let dy = chol.solve(&rhs);
                let dy: Vec<f64> = dy.iter().copied().collect();
                let ldy = self.linear_apply(&dy);
                let dzl: Vec<f64> = (0..self.linear.len()).map(|r| rdl[r] + ldy[r]).collect();
                let dzb: Vec<CMat> =
                    self.blocks.iter().enumerate().map(|(b, blk)| &rdb[b] + blk.apply(&dy)).collect();
                let dxl: Vec<f64> = (0..self.linear.len())
                    .map(|r| rl[r] - it.xl[r] - it.xl[r] * dzl[r] * zinv_l[r] + it.xl[r] * rdl[r] * zinv_l[r])
                    .collect();
                let dxb: Vec<CMat> = (0..self.blocks.len())
                    .map(|b| {
                        // ΔX = R − X − X(ΔZ − R_d)Z⁻¹ where R already holds −X R_d Z⁻¹.
                        let t = &rb[b] - &it.xb[b] - &it.xb[b] * (&dzb[b] - &rdb[b]) * &zinv_b[b];
                        hermitian_part(&t)
                    })
                    .collect();
                (dy, dxl, dzl, dxb, dzb)
            };

            // Predictor.
            let (_, dxl_a, dzl_a, dxb_a, dzb_a) = direction(0.0, None, None);
            let ap = step_length(&it.xl, &dxl_a, &it.xb, &dxb_a);
            let ad = step_length(&it.zl, &dzl_a, &it.zb, &dzb_a);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let mut xz_aff = 0.0;
            for r in 0..self.linear.len() {
                xz_aff += (it.xl[r] + ap * dxl_a[r]) * (it.zl[r] + ad * dzl_a[r]);
            }
            for b in 0..self.blocks.len() {
                let x = &it.xb[b] + &dxb_a[b] * C64::new(ap, 0.0);
                let z = &it.zb[b] + &dzb_a[b] * C64::new(ad, 0.0);
                xz_aff += crate::linalg::re_trace_product(&x, &z);
            }
            let sigma = (xz_aff.max(0.0) / xz.max(1e-300)).powi(3).clamp(0.0, 1.0);

            // Corrector.
            let corr_l: Vec<f64> = (0..self.linear.len()).map(|r| dxl_a[r] * dzl_a[r] * zinv_l[r]).collect();
            let corr_b: Vec<CMat> = (0..self.blocks.len()).map(|b| &dxb_a[b] * &dzb_a[b] * &zinv_b[b]).collect();
            let (dy, dxl, dzl, dxb, dzb) = direction(sigma * mu, Some(&corr_l), Some(&corr_b));
            let ap = step_length(&it.xl, &dxl, &it.xb, &dxb);
            let ad = step_length(&it.zl, &dzl, &it.zb, &dzb);
            let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
            let ap = (gamma * ap).min(1.0);
            let ad = (gamma * ad).min(1.0);
            if !(ap > 1e-12 || ad > 1e-12) {
                return Err(Error::NotConverged(diag));
            }

            for r in 0..self.linear.len() {
                it.xl[r] += ap * dxl[r];
                it.zl[r] += ad * dzl[r];
            }
            for b in 0..self.blocks.len() {
                it.xb[b] += &dxb[b] * C64::new(ap, 0.0);
                it.zb[b] += &dzb[b] * C64::new(ad, 0.0);
                it.xb[b] = hermitian_part(&it.xb[b]);
                it.zb[b] = hermitian_part(&it.zb[b]);
            }
            for i in 0..m {
                it.y[i] += ad * dy[i];
            }
        }
        Err(Error::NotConverged(diag))
    }
}

/// Largest `α` keeping `x + αΔx ≥ 0` and every `X + αΔX ⪰ 0`.
fn step_length(xl: &[f64], dxl: &[f64], xb: &[CMat], dxb: &[CMat]) -> f64 {
    let mut alpha = f64::INFINITY;
    for (x, d) in xl.iter().zip(dxl) {
        if *d < 0.0 {
            alpha = alpha.min(-x / d);
        }
    }
    for (x, d) in xb.iter().zip(dxb) {
        let Some(chol) = hermitian_part(x).cholesky() else {
            return 0.0;
        };
        let l = chol.l();
        let w = l.solve_lower_triangular(d).expect("triangular solve");
        let w2 = l.solve_lower_triangular(&w.adjoint()).expect("triangular solve");
        let lmin = hermitian_eigen(&w2).0[0];
        if lmin < 0.0 {
            alpha = alpha.min(-1.0 / lmin);
        }
    }
    alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: SdpOutcome) -> SdpSolution {
        match o {
            SdpOutcome::Optimal(s) => s,
            SdpOutcome::Infeasible(_) => panic!("unexpected infeasibility"),
        }
    }

    #[test]
    fn hermitian_param_round_trip() {
        let p = HermitianParam::new(2, 3);
        let u = CMat::from_fn(3, 3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let u = hermitian_part(&u);
        let mut y = vec![0.0, 0.0];
        y.extend(p.vectorize(&u));
        assert!((p.assemble(&y) - &u).norm() < 1e-15);
        let mut out = vec![0.0; 11];
        p.project(&u, 1.0, &mut out);
        // ⟨B_k, U⟩ doubles the off-diagonal parameters.
        assert_eq!(out[2], u[(0, 0)].re);
        assert!((out[5] - 2.0 * u[(0, 1)].re).abs() < 1e-15);
        assert!((out[6] - 2.0 * u[(0, 1)].im).abs() < 1e-15);
    }

    #[test]
    fn linear_program() {
        // minimize y0 + 2 y1 subject to y0 ≥ 1, y1 ≥ 0.5, y0 + y1 ≥ 2.
        let mut p = SdpProblem::new(2, vec![1.0, 2.0]);
        p.linear.push(-1.0, vec![(0, 1.0)]);
        p.linear.push(-0.5, vec![(1, 1.0)]);
        p.linear.push(-2.0, vec![(0, 1.0), (1, 1.0)]);
        let s = optimal(p.solve(&SdpSettings::default()).unwrap());
        assert!((s.y[0] - 1.5).abs() < 1e-7 && (s.y[1] - 0.5).abs() < 1e-7);
        assert!((s.primal_objective - 2.5).abs() < 1e-7);
    }

    #[test]
    fn minimum_eigenvalue_as_sdp() {
        // minimize −t subject to A − tI ⪰ 0 gives t = λ_min(A).
        let a = CMat::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0), C64::new(0.5, 0.5), C64::new(0.0, 0.0),
                C64::new(0.5, -0.5), C64::new(3.0, 0.0), C64::new(0.0, -1.0),
                C64::new(0.0, 0.0), C64::new(0.0, 1.0), C64::new(1.5, 0.0),
            ],
        );
        let mut p = SdpProblem::new(1, vec![-1.0]);
        p.blocks.push(MatrixBlock::Sparse(SparseBlock {
            constant: a.clone(),
            coeffs: vec![(0, (0..3).map(|i| (i, i, C64::new(-1.0, 0.0))).collect())],
        }));
        let s = optimal(p.solve(&SdpSettings::default()).unwrap());
        assert!((s.y[0] - crate::linalg::min_eigenvalue(&a)).abs() < 1e-7);
    }

    #[test]
    fn trace_minimization_with_congruence_block() {
        // minimize Tr U subject to aᴴUa ≥ 1, U ⪰ 0: optimum 1/‖a‖², U = aaᴴ/‖a‖⁴.
        let a = crate::CVec::from_vec(vec![C64::new(1.0, 0.5), C64::new(-0.3, 0.2), C64::new(0.7, -1.0)]);
        let param = HermitianParam::new(0, 3);
        let mut objective = vec![0.0; 9];
        for k in 0..3 {
            objective[k] = 1.0;
        }
        let mut p = SdpProblem::new(9, objective);
        let pi = &a * a.adjoint();
        let mut g = vec![0.0; 9];
        param.project(&pi, 1.0, &mut g);
        p.linear.push(-1.0, g.iter().enumerate().map(|(i, v)| (i, *v)).collect());
        p.blocks.push(MatrixBlock::Congruence(CongruenceBlock {
            constant: CMat::zeros(3, 3),
            param: param.clone(),
            scale: 1.0,
            frame: CMat::identity(3, 3),
            extras: vec![],
        }));
        let s = optimal(p.solve(&SdpSettings::default()).unwrap());
        let nrm2 = a.norm_squared();
        assert!((s.primal_objective - 1.0 / nrm2).abs() < 1e-8, "{} vs {}", s.primal_objective, 1.0 / nrm2);
        let u = param.assemble(&s.y);
        let expect = &a * a.adjoint() * C64::new(1.0 / (nrm2 * nrm2), 0.0);
        assert!((u - expect).norm() < 1e-6);
    }

    #[test]
    fn congruence_schur_matches_sparse_reference() {
        // Same block expressed both ways must give the same Schur matrix.
        let f = CMat::from_fn(2, 3, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5));
        let d = CMat::from_diagonal(&crate::CVec::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(-2.0, 0.0),
        ]));
        let cong = MatrixBlock::Congruence(CongruenceBlock {
            constant: CMat::identity(3, 3),
            param: HermitianParam::new(0, 2),
            scale: -0.7,
            frame: f,
            extras: vec![(4, d)],
        });
        let mut coeffs = Vec::new();
        for i in 0..5 {
            let a = cong.coefficient(i).unwrap();
            let mut e = Vec::new();
            for r in 0..3 {
                for c in 0..3 {
                    if a[(r, c)].norm() > 0.0 {
                        e.push((r, c, a[(r, c)]));
                    }
                }
            }
            coeffs.push((i, e));
        }
        let sparse = MatrixBlock::Sparse(SparseBlock { constant: CMat::identity(3, 3), coeffs });
        let x = hermitian_part(&CMat::from_fn(3, 3, |i, j| C64::new(if i == j { 3.0 } else { 0.4 }, (i as f64 - j as f64) * 0.3)));
        let zi = hermitian_part(&CMat::from_fn(3, 3, |i, j| C64::new(if i == j { 2.0 } else { -0.2 }, (j as f64 - i as f64) * 0.1)));
        let mut m1 = DMatrix::zeros(5, 5);
        let mut m2 = DMatrix::zeros(5, 5);
        cong.schur(&x, &zi, &mut m1);
        sparse.schur(&x, &zi, &mut m2);
        assert!((&m1 - &m2).norm() < 1e-12 * m2.norm());
        let y = [0.3, -0.2, 0.5, 0.1, 0.9];
        assert!((cong.apply(&y) - sparse.apply(&y)).norm() < 1e-12);
        let (mut a1, mut a2) = (vec![0.0; 5], vec![0.0; 5]);
        cong.adjoint(&x, &mut a1);
        sparse.adjoint(&x, &mut a2);
        for (p, q) in a1.iter().zip(&a2) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn infeasible_problem_returns_certificate() {
        // y ≥ 1 and y ≤ 0.
        let mut p = SdpProblem::new(1, vec![0.0]);
        p.linear.push(-1.0, vec![(0, 1.0)]);
        p.linear.push(0.0, vec![(0, -1.0)]);
        match p.solve(&SdpSettings::default()).unwrap() {
            SdpOutcome::Infeasible(c) => {
                assert!(c.x_linear.iter().all(|v| *v >= 0.0));
                assert!(c.residual < 1e-8);
            }
            SdpOutcome::Optimal(_) => panic!("expected infeasibility"),
        }
    }

    #[test]
    fn sparse_dump_lists_nonzeros() {
        let mut p = SdpProblem::new(1, vec![1.0]);
        p.linear.push(-1.0, vec![(0, 2.0)]);
        let mut buf = Vec::new();
        p.write_sparse(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0 1 1 1 -1"));
        assert!(lines[2].starts_with("1 1 1 1 2"));
    }
}
