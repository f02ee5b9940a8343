/// Smooth scalar potentials on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub enum Potential {
    Zero,
    Constant(f64),
    /// `k |r|^2 / 2`.
    Harmonic { k: f64 },
    /// `-z / sqrt(|r|^2 + a^2)`.
    SoftCoulomb { z: f64, a: f64 },
    /// `amplitude * cos(wavenumber * r_1)`.
    Cosine { amplitude: f64, wavenumber: f64 },
}

impl Potential {
    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero) || matches!(self, Potential::Constant(c) if *c == 0.0)
    }

    /// True if the potential is constant (all derivatives vanish).
    pub fn is_constant(&self) -> bool {
        matches!(self, Potential::Zero | Potential::Constant(_))
    }

    pub fn value(&self, r: &[f64]) -> f64 {
        let r2: f64 = r.iter().map(|v| v * v).sum();
        match *self {
            Potential::Zero => 0.0,
            Potential::Constant(c) => c,
            Potential::Harmonic { k } => 0.5 * k * r2,
            Potential::SoftCoulomb { z, a } => -z / (r2 + a * a).sqrt(),
            Potential::Cosine { amplitude, wavenumber } => amplitude * (wavenumber * r[0]).cos(),
        }
    }

    pub fn gradient(&self, r: &[f64]) -> Vec<f64> {
        let r2: f64 = r.iter().map(|v| v * v).sum();
        match *self {
            Potential::Zero | Potential::Constant(_) => vec![0.0; r.len()],
            Potential::Harmonic { k } => r.iter().map(|v| k * v).collect(),
            Potential::SoftCoulomb { z, a } => {
                let s = (r2 + a * a).powf(1.5);
                r.iter().map(|v| z * v / s).collect()
            }
            Potential::Cosine { amplitude, wavenumber } => {
                let mut g = vec![0.0; r.len()];
                g[0] = -amplitude * wavenumber * (wavenumber * r[0]).sin();
                g
            }
        }
    }

    /// Row-major Hessian.
    pub fn hessian(&self, r: &[f64]) -> Vec<f64> {
        let d = r.len();
        let r2: f64 = r.iter().map(|v| v * v).sum();
        let mut hm = vec![0.0; d * d];
        match *self {
            Potential::Zero | Potential::Constant(_) => {}
            Potential::Harmonic { k } => {
                for i in 0..d {
                    hm[i * d + i] = k;
                }
            }
            Potential::SoftCoulomb { z, a } => {
                let s = r2 + a * a;
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hm[i * d + j] = z * (delta / s.powf(1.5) - 3.0 * r[i] * r[j] / s.powf(2.5));
                    }
                }
            }
            Potential::Cosine { amplitude, wavenumber } => {
                hm[0] = -amplitude * wavenumber * wavenumber * (wavenumber * r[0]).cos();
            }
        }
        hm
    }

    /// External potentials must have bounded derivatives of all orders.
    pub fn has_bounded_derivatives(&self) -> bool {
        !matches!(self, Potential::Harmonic { k } if *k != 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(p: &Potential, r: &[f64]) {
        let g = p.gradient(r);
        let hm = p.hessian(r);
        let d = r.len();
        let e = 1e-5;
        for i in 0..d {
            let mut rp = r.to_vec();
            let mut rm = r.to_vec();
            rp[i] += e;
            rm[i] -= e;
            let fd = (p.value(&rp) - p.value(&rm)) / (2.0 * e);
            assert!((fd - g[i]).abs() < 1e-8, "{p:?} grad {i}");
            let gp = p.gradient(&rp);
            let gm = p.gradient(&rm);
            for j in 0..d {
                let fd2 = (gp[j] - gm[j]) / (2.0 * e);
                assert!((fd2 - hm[i * d + j]).abs() < 1e-7, "{p:?} hess {i}{j}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let r = [0.3, -0.7];
        fd_check(&Potential::Harmonic { k: 2.0 }, &r);
        fd_check(&Potential::SoftCoulomb { z: 1.0, a: 0.5 }, &r);
        fd_check(&Potential::Cosine { amplitude: 0.4, wavenumber: 1.5 }, &r);
    }
}
