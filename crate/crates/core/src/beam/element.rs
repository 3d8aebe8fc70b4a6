//! Shape functions and per-element integration tables. All elements share
//! the same length, so the tables are computed once.

use crate::quadrature::gauss_legendre_unit;

/// 7 points: exact through degree 13, which covers every integrand below
/// (the highest is `w_x³ N'`, degree 8).
const QUAD_POINTS: usize = 7;

#[derive(Debug, Clone)]
pub struct ElementTables {
    pub h: f64,
    /// Physical quadrature weights (already multiplied by `h`).
    pub weights: Vec<f64>,
    /// Hermite values `N_a` at each point.
    pub n: Vec<[f64; 4]>,
    /// `dN_a/dx`.
    pub dn: Vec<[f64; 4]>,
    /// `d²N_a/dx²`.
    pub ddn: Vec<[f64; 4]>,
    /// Linear values `L_a`.
    pub l: Vec<[f64; 2]>,
    /// `dL_a/dx` (constant).
    pub dl: [f64; 2],
}

pub fn transverse_dofs(e: usize) -> [usize; 4] {
    [2 * e, 2 * e + 1, 2 * e + 2, 2 * e + 3]
}

pub fn axial_dofs(e: usize) -> [usize; 2] {
    [e, e + 1]
}

type Mat4 = [[f64; 4]; 4];
type Mat2 = [[f64; 2]; 2];

impl ElementTables {
    pub fn new(h: f64) -> Self {
        let (xi, w) = gauss_legendre_unit(QUAD_POINTS);
        let mut n = Vec::with_capacity(QUAD_POINTS);
        let mut dn = Vec::with_capacity(QUAD_POINTS);
        let mut ddn = Vec::with_capacity(QUAD_POINTS);
        let mut l = Vec::with_capacity(QUAD_POINTS);
        for &s in &xi {
            let s2 = s * s;
            let s3 = s2 * s;
            n.push([
                1.0 - 3.0 * s2 + 2.0 * s3,
                h * (s - 2.0 * s2 + s3),
                3.0 * s2 - 2.0 * s3,
                h * (-s2 + s3),
            ]);
            dn.push([
                (-6.0 * s + 6.0 * s2) / h,
                1.0 - 4.0 * s + 3.0 * s2,
                (6.0 * s - 6.0 * s2) / h,
                -2.0 * s + 3.0 * s2,
            ]);
            ddn.push([
                (-6.0 + 12.0 * s) / (h * h),
                (-4.0 + 6.0 * s) / h,
                (6.0 - 12.0 * s) / (h * h),
                (-2.0 + 6.0 * s) / h,
            ]);
            l.push([1.0 - s, s]);
        }
        Self {
            h,
            weights: w.iter().map(|w| w * h).collect(),
            n,
            dn,
            ddn,
            l,
            dl: [-1.0 / h, 1.0 / h],
        }
    }

    pub fn points(&self) -> usize {
        self.weights.len()
    }

    /// Consistent mass `∫N N`, bending stiffness `(1/12)∫N''N''` and unit
    /// load `∫N`.
    pub fn transverse_element_matrices(&self) -> (Mat4, Mat4, [f64; 4]) {
        let mut m = [[0.0; 4]; 4];
        let mut k = [[0.0; 4]; 4];
        let mut q = [0.0; 4];
        for g in 0..self.points() {
            let w = self.weights[g];
            for a in 0..4 {
                q[a] += w * self.n[g][a];
                for b in 0..4 {
                    m[a][b] += w * self.n[g][a] * self.n[g][b];
                    k[a][b] += w * self.ddn[g][a] * self.ddn[g][b] / 12.0;
                }
            }
        }
        (m, k, q)
    }

    /// Axial mass `∫L L`, stiffness `∫L'L'` and unit load `∫L`.
    pub fn axial_element_matrices(&self) -> (Mat2, Mat2, [f64; 2]) {
        let mut m = [[0.0; 2]; 2];
        let mut k = [[0.0; 2]; 2];
        let mut p = [0.0; 2];
        for g in 0..self.points() {
            let w = self.weights[g];
            for a in 0..2 {
                p[a] += w * self.l[g][a];
                for b in 0..2 {
                    m[a][b] += w * self.l[g][a] * self.l[g][b];
                    k[a][b] += w * self.dl[a] * self.dl[b];
                }
            }
        }
        (m, k, p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_element_matches_closed_form() {
        let h = 0.3;
        let t = ElementTables::new(h);
        let (m, k, _) = t.transverse_element_matrices();
        // Classical Euler–Bernoulli element: EI/h³ [12 6h -12 6h; ...] with EI = 1/12.
        let ei = 1.0 / 12.0;
        assert!((k[0][0] - 12.0 * ei / h.powi(3)).abs() < 1e-10);
        assert!((k[0][1] - 6.0 * ei / h.powi(2)).abs() < 1e-10);
        assert!((k[1][1] - 4.0 * ei / h).abs() < 1e-10);
        assert!((k[1][3] - 2.0 * ei / h).abs() < 1e-10);
        // Consistent mass: h/420 [156 22h 54 -13h; ...]
        assert!((m[0][0] - 156.0 * h / 420.0).abs() < 1e-14);
        assert!((m[0][1] - 22.0 * h * h / 420.0).abs() < 1e-14);
        assert!((m[0][2] - 54.0 * h / 420.0).abs() < 1e-14);
        assert!((m[1][3] + 3.0 * h.powi(3) / 420.0).abs() < 1e-14);
    }
}
