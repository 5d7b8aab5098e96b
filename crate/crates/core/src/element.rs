//! Q4 element kernels: shape functions, quadrature, lumped mass, forces, the patch
//! phase-field residual and tangent, and the elemental critical time step.

use nalgebra::{SMatrix, SymmetricEigen};

use crate::error::ElementError;
use crate::material::{
    degradation, psi_plus, spectral_split, MaterialParams, PhaseFieldVariant, SymTensor2,
};
use crate::mesh::Mesh;

/// 2-point Gauss abscissae on [-1, 1] (unit weights).
pub const GAUSS_2: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Node `a` sits at reference corner `REF_NODES[a]`.
pub const REF_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Bilinear shape values and their reference-coordinate gradients at `(xi, eta)`.
pub fn shape_eval(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let mut n = [0.0; 4];
    let mut dn = [[0.0; 2]; 4];
    for (a, r) in REF_NODES.iter().enumerate() {
        let sx = 1.0 + r[0] * xi;
        let sy = 1.0 + r[1] * eta;
        n[a] = 0.25 * sx * sy;
        dn[a] = [0.25 * r[0] * sy, 0.25 * r[1] * sx];
    }
    (n, dn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussPoint {
    pub n: [f64; 4],
    /// Physical gradients of the shape functions (1/m).
    pub grad: [[f64; 2]; 4],
    /// Quadrature weight times Jacobian determinant (m^2, unit thickness).
    pub weight: f64,
}

/// Precomputed 2x2 quadrature data of one element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementKernel {
    pub points: [GaussPoint; 4],
    pub area: f64,
}

impl ElementKernel {
    pub fn new(coords: &[[f64; 2]; 4]) -> Result<Self, ElementError> {
        let mut points = [GaussPoint {
            n: [0.0; 4],
            grad: [[0.0; 2]; 4],
            weight: 0.0,
        }; 4];
        // relative to the first node: no cancellation from large absolute coordinates,
        // and translated copies of an element get identical kernels
        let o = coords[0];
        let rel = coords.map(|x| [x[0] - o[0], x[1] - o[1]]);
        let mut area = 0.0;
        let mut k = 0;
        for &eta in &GAUSS_2 {
            for &xi in &GAUSS_2 {
                let (n, dn) = shape_eval(xi, eta);
                let mut j = [[0.0; 2]; 2];
                for a in 0..4 {
                    for r in 0..2 {
                        for c in 0..2 {
                            j[r][c] += rel[a][r] * dn[a][c];
                        }
                    }
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                if !(det > 0.0) {
                    return Err(ElementError::Degenerate(det));
                }
                let mut grad = [[0.0; 2]; 4];
                for a in 0..4 {
                    // inverse-transpose of J applied to the reference gradient
                    grad[a][0] = (j[1][1] * dn[a][0] - j[1][0] * dn[a][1]) / det;
                    grad[a][1] = (-j[0][1] * dn[a][0] + j[0][0] * dn[a][1]) / det;
                }
                points[k] = GaussPoint {
                    n,
                    grad,
                    weight: det,
                };
                area += det;
                k += 1;
            }
        }
        Ok(Self { points, area })
    }

    pub fn for_element(mesh: &Mesh, e: usize) -> Result<Self, ElementError> {
        Self::new(&mesh.element_coords(e))
    }

    /// Row-sum lumped mass per node (kg per unit thickness scaled by `thickness`).
    pub fn lumped_mass(&self, rho: f64, thickness: f64) -> [f64; 4] {
        let mut m = [0.0; 4];
        for gp in &self.points {
            // sum_b N_b = 1, so the row sum of N_a N_b is N_a
            for a in 0..4 {
                m[a] += rho * thickness * gp.weight * gp.n[a];
            }
        }
        m
    }

    pub fn strain(gp: &GaussPoint, u: &[[f64; 2]; 4]) -> SymTensor2 {
        let mut e = SymTensor2::ZERO;
        for a in 0..4 {
            let g = gp.grad[a];
            e.xx += u[a][0] * g[0];
            e.yy += u[a][1] * g[1];
            e.xy += 0.5 * (u[a][0] * g[1] + u[a][1] * g[0]);
        }
        e
    }

    pub fn interpolate(gp: &GaussPoint, d: &[f64; 4]) -> f64 {
        (0..4).map(|a| gp.n[a] * d[a]).sum()
    }

    pub fn gradient(gp: &GaussPoint, d: &[f64; 4]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for a in 0..4 {
            g[0] += gp.grad[a][0] * d[a];
            g[1] += gp.grad[a][1] * d[a];
        }
        g
    }

    /// `dV_e/du_e`: the integral of `B^T (g(d) sigma_plus + sigma_minus)`.
    pub fn internal_force(
        &self,
        u: &[[f64; 2]; 4],
        d: &[f64; 4],
        params: &MaterialParams,
    ) -> [[f64; 2]; 4] {
        let mut f = [[0.0; 2]; 4];
        for gp in &self.points {
            let eps = Self::strain(gp, u);
            let split = spectral_split(&eps, params.lambda, params.mu);
            let (g, _, _) = degradation(Self::interpolate(gp, d));
            let s = split.sigma_plus.scale(g).add(&split.sigma_minus);
            for a in 0..4 {
                let gr = gp.grad[a];
                f[a][0] += gp.weight * (s.xx * gr[0] + s.xy * gr[1]);
                f[a][1] += gp.weight * (s.xy * gr[0] + s.yy * gr[1]);
            }
        }
        f
    }

    /// Elemental strain energy `int g(d) psi_plus + psi_minus`.
    pub fn strain_energy(&self, u: &[[f64; 2]; 4], d: &[f64; 4], params: &MaterialParams) -> f64 {
        self.points
            .iter()
            .map(|gp| {
                let eps = Self::strain(gp, u);
                let split = spectral_split(&eps, params.lambda, params.mu);
                let (g, _, _) = degradation(Self::interpolate(gp, d));
                gp.weight * (g * split.psi_plus + split.psi_minus)
            })
            .sum()
    }

    /// Elemental crack energy `int gc/(4 cw) (w(d)/ell + ell |grad d|^2)`.
    pub fn crack_energy(&self, d: &[f64; 4], variant: PhaseFieldVariant, gc: f64, ell: f64) -> f64 {
        let c = gc / (4.0 * variant.cw());
        self.points
            .iter()
            .map(|gp| {
                let dv = Self::interpolate(gp, d);
                let g = Self::gradient(gp, d);
                gp.weight * c * (variant.w(dv) / ell + ell * (g[0] * g[0] + g[1] * g[1]))
            })
            .sum()
    }

    /// Consistent nodal forces of a constant body force density (N/m^3).
    pub fn body_force(&self, b: [f64; 2]) -> [[f64; 2]; 4] {
        let mut f = [[0.0; 2]; 4];
        for gp in &self.points {
            for a in 0..4 {
                f[a][0] += gp.weight * gp.n[a] * b[0];
                f[a][1] += gp.weight * gp.n[a] * b[1];
            }
        }
        f
    }

    /// Undamaged plane-strain stiffness, dofs ordered `(ux0, uy0, ux1, ...)`.
    pub fn elastic_stiffness(&self, params: &MaterialParams) -> SMatrix<f64, 8, 8> {
        let (l, m) = (params.lambda, params.mu);
        let dmat = nalgebra::Matrix3::new(l + 2.0 * m, l, 0.0, l, l + 2.0 * m, 0.0, 0.0, 0.0, m);
        let mut k = SMatrix::<f64, 8, 8>::zeros();
        for gp in &self.points {
            let mut b = SMatrix::<f64, 3, 8>::zeros();
            for a in 0..4 {
                let g = gp.grad[a];
                b[(0, 2 * a)] = g[0];
                b[(1, 2 * a + 1)] = g[1];
                b[(2, 2 * a)] = g[1];
                b[(2, 2 * a + 1)] = g[0];
            }
            k += b.transpose() * dmat * b * gp.weight;
        }
        k
    }
}

/// Row-sum lumped mass of an element given its corner coordinates.
pub fn lumped_mass(
    coords: &[[f64; 2]; 4],
    rho: f64,
    thickness: f64,
) -> Result<[f64; 4], ElementError> {
    Ok(ElementKernel::new(coords)?.lumped_mass(rho, thickness))
}

/// Nodal forces of a constant traction on a straight edge `p -> q` (2-point Gauss).
pub fn edge_traction_force(p: [f64; 2], q: [f64; 2], traction: [f64; 2]) -> [[f64; 2]; 2] {
    let half = 0.5 * (q[0] - p[0]).hypot(q[1] - p[1]);
    let mut f = [[0.0; 2]; 2];
    for &s in &GAUSS_2 {
        let n = [0.5 * (1.0 - s), 0.5 * (1.0 + s)];
        for a in 0..2 {
            f[a][0] += half * n[a] * traction[0];
            f[a][1] += half * n[a] * traction[1];
        }
    }
    f
}

/// Largest natural frequency of the undamaged element with lumped mass.
pub fn max_frequency(kernel: &ElementKernel, params: &MaterialParams) -> Result<f64, ElementError> {
    let m = kernel.lumped_mass(params.density, 1.0);
    if m.iter().any(|&v| !(v > 0.0)) {
        return Err(ElementError::Degenerate(kernel.area));
    }
    let k = kernel.elastic_stiffness(params);
    let s = SMatrix::<f64, 8, 1>::from_fn(|i, _| 1.0 / m[i / 2].sqrt());
    let a = SMatrix::<f64, 8, 8>::from_fn(|i, j| s[i] * k[(i, j)] * s[j]);
    let eig = SymmetricEigen::new(a);
    let w2 = eig.eigenvalues.max();
    Ok(w2.max(0.0).sqrt())
}

/// `C_CFL * 2 / omega_max` for the undamaged element.
pub fn critical_time_step(
    kernel: &ElementKernel,
    params: &MaterialParams,
    c_cfl: f64,
) -> Result<f64, ElementError> {
    let w = max_frequency(kernel, params)?;
    if !(w > 0.0) {
        return Err(ElementError::Degenerate(kernel.area));
    }
    Ok(c_cfl * 2.0 / w)
}

/// Domain of the elemental phase solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSolveMode {
    /// Integrate over the element and all its node-sharing neighbours.
    #[default]
    Patch,
    /// Integrate over the element alone.
    Local,
}

impl std::str::FromStr for PhaseSolveMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "patch" => Ok(Self::Patch),
            "local" | "element" | "no-patch" => Ok(Self::Local),
            other => Err(format!("unknown phase solve mode '{other}'")),
        }
    }
}

/// One quadrature point of a patch with the displacement frozen.
///
/// `n`/`grad` are the shape data of the solved element's four nodes (zero where a node
/// is not a vertex of the host element); `d_fixed`/`grad_fixed` collect the frozen
/// contribution of the host element's other nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchPoint {
    pub weight: f64,
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub n: [f64; 4],
    pub grad: [[f64; 2]; 4],
    pub d_fixed: f64,
    pub grad_fixed: [f64; 2],
}

/// Patch energy as a function of the four phase values of one element.
#[derive(Debug, Clone)]
pub struct PatchQuadrature {
    pub points: Vec<PatchPoint>,
    pub variant: PhaseFieldVariant,
    pub gc: f64,
    pub ell: f64,
}

impl PatchQuadrature {
    pub fn new(variant: PhaseFieldVariant, gc: f64, ell: f64) -> Self {
        Self {
            points: Vec::new(),
            variant,
            gc,
            ell,
        }
    }

    /// Refills the quadrature for element `e` from the current nodal state.
    #[allow(clippy::too_many_arguments)]
    pub fn assemble(
        &mut self,
        mesh: &Mesh,
        kernels: &[ElementKernel],
        e: usize,
        u: &[[f64; 2]],
        d: &[f64],
        params: &MaterialParams,
        mode: PhaseSolveMode,
    ) {
        self.points.clear();
        let own = mesh.elements[e];
        let single = [e];
        let hosts: &[usize] = match mode {
            PhaseSolveMode::Patch => &mesh.patches[e],
            PhaseSolveMode::Local => &single,
        };
        for &h in hosts {
            let conn = mesh.elements[h];
            let ue = conn.map(|a| u[a]);
            // local index of each host vertex within `own`
            let slot = conn.map(|a| own.iter().position(|&b| b == a));
            for gp in &kernels[h].points {
                let eps = ElementKernel::strain(gp, &ue);
                let pp = psi_plus(&eps, params.lambda, params.mu);
                let total = params.isotropic_energy(&eps);
                let mut p = PatchPoint {
                    weight: gp.weight,
                    psi_plus: pp,
                    psi_minus: (total - pp).max(0.0),
                    n: [0.0; 4],
                    grad: [[0.0; 2]; 4],
                    d_fixed: 0.0,
                    grad_fixed: [0.0; 2],
                };
                for b in 0..4 {
                    match slot[b] {
                        Some(s) => {
                            p.n[s] = gp.n[b];
                            p.grad[s] = gp.grad[b];
                        }
                        None => {
                            let db = d[conn[b]];
                            p.d_fixed += gp.n[b] * db;
                            p.grad_fixed[0] += gp.grad[b][0] * db;
                            p.grad_fixed[1] += gp.grad[b][1] * db;
                        }
                    }
                }
                self.points.push(p);
            }
        }
    }

    fn eval(p: &PatchPoint, de: &[f64; 4]) -> (f64, [f64; 2]) {
        let mut v = p.d_fixed;
        let mut g = p.grad_fixed;
        for a in 0..4 {
            v += p.n[a] * de[a];
            g[0] += p.grad[a][0] * de[a];
            g[1] += p.grad[a][1] * de[a];
        }
        (v, g)
    }

    /// Patch strain plus crack energy.
    pub fn energy(&self, de: &[f64; 4]) -> f64 {
        let c = self.gc / (4.0 * self.variant.cw());
        self.points
            .iter()
            .map(|p| {
                let (v, g) = Self::eval(p, de);
                let (deg, _, _) = degradation(v);
                p.weight
                    * (deg * p.psi_plus
                        + p.psi_minus
                        + c * (self.variant.w(v) / self.ell + self.ell * (g[0] * g[0] + g[1] * g[1])))
            })
            .sum()
    }

    pub fn residual(&self, de: &[f64; 4]) -> [f64; 4] {
        let c = self.gc / (4.0 * self.variant.cw());
        let mut r = [0.0; 4];
        for p in &self.points {
            let (v, g) = Self::eval(p, de);
            let (_, dg, _) = degradation(v);
            let local = dg * p.psi_plus + c * self.variant.dw(v) / self.ell;
            for a in 0..4 {
                r[a] += p.weight
                    * (local * p.n[a]
                        + 2.0 * c * self.ell * (g[0] * p.grad[a][0] + g[1] * p.grad[a][1]));
            }
        }
        r
    }

    pub fn tangent(&self, de: &[f64; 4]) -> [[f64; 4]; 4] {
        let c = self.gc / (4.0 * self.variant.cw());
        let mut k = [[0.0; 4]; 4];
        for p in &self.points {
            let (v, _) = Self::eval(p, de);
            let (_, _, ddg) = degradation(v);
            let local = ddg * p.psi_plus + c * self.variant.ddw(v) / self.ell;
            for a in 0..4 {
                for b in a..4 {
                    let val = p.weight
                        * (local * p.n[a] * p.n[b]
                            + 2.0
                                * c
                                * self.ell
                                * (p.grad[a][0] * p.grad[b][0] + p.grad[a][1] * p.grad[b][1]));
                    k[a][b] += val;
                    if a != b {
                        k[b][a] += val;
                    }
                }
            }
        }
        k
    }
}
