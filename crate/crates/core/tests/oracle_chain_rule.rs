//! Independent check of the closed-form hodograph coefficients.
//!
//! The potential `φ(t, s, ω)` is reconstructed from polynomial data for
//! `ψ(T, R, ω)` and `b(T, ω)` by inverting the change of variables with
//! second-order jets, and the potential equation in similarity variables
//! is evaluated directly. Each coefficient is then read off by unit
//! perturbation of the corresponding second derivative of `ψ`.

use conic_shock::hodograph::{bernoulli_argument, coeffs_with_csq, HodographState};
use rand::{rngs::StdRng, Rng, SeedableRng};
use std::ops::{Add, Div, Mul, Sub};

const NV: usize = 5;

/// Value, gradient and Hessian in the variables `(t, s, w₁, w₂, w₃)`.
#[derive(Clone, Copy, Debug)]
struct Jet {
    v: f64,
    g: [f64; NV],
    h: [[f64; NV]; NV],
}

impl Jet {
    fn c(v: f64) -> Jet {
        Jet { v, g: [0.0; NV], h: [[0.0; NV]; NV] }
    }
    fn var(v: f64, k: usize) -> Jet {
        let mut j = Jet::c(v);
        j.g[k] = 1.0;
        j
    }
    fn scale(self, a: f64) -> Jet {
        let mut o = self;
        o.v *= a;
        o.g.iter_mut().for_each(|x| *x *= a);
        o.h.iter_mut().flatten().for_each(|x| *x *= a);
        o
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for i in 0..NV {
            r.g[i] += o.g[i];
            for j in 0..NV {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::c(self.v * o.v);
        for i in 0..NV {
            r.g[i] = self.v * o.g[i] + self.g[i] * o.v;
            for j in 0..NV {
                r.h[i][j] = self.v * o.h[i][j] + self.h[i][j] * o.v + self.g[i] * o.g[j] + self.g[j] * o.g[i];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        // 1/o by the chain rule: (1/x)' = −x'/x², (1/x)'' = 2x'x'/x³ − x''/x².
        let inv = 1.0 / o.v;
        let mut rec = Jet::c(inv);
        for i in 0..NV {
            rec.g[i] = -o.g[i] * inv * inv;
            for j in 0..NV {
                rec.h[i][j] = 2.0 * o.g[i] * o.g[j] * inv * inv * inv - o.h[i][j] * inv * inv;
            }
        }
        self * rec
    }
}

/// Second derivatives of `ψ` that enter the equation linearly.
#[derive(Clone, Copy, Default)]
struct Second {
    tt: f64,
    tr: f64,
    tz: [f64; 3],
    rr: f64,
    rz: [f64; 3],
    zz: [[f64; 3]; 3],
}

/// `t⁰, t⁻¹, t⁻²` parts of the potential equation (three space
/// dimensions, sound speed `csq` held fixed) and the Bernoulli argument at `t`.
fn potential_equation(st: &HodographState, d2: &Second, b0: f64, csq: f64, t0: f64, bern: f64) -> ([f64; 3], f64) {
    let s0 = st.b + (st.r - 1.0) * st.psi;
    let dt = Jet::var(0.0, 0);
    let s = Jet::var(s0, 1);
    let w: [Jet; 3] = std::array::from_fn(|i| Jet::var(0.0, 2 + i));

    let mut b = Jet::c(st.b) + dt.scale(st.b_t) + (dt * dt).scale(0.5 * st.b_tt);
    for i in 0..3 {
        b = b + w[i].scale(st.zb[i]) + (dt * w[i]).scale(st.zb_t[i]);
        for j in 0..3 {
            b = b + (w[i] * w[j]).scale(0.5 * st.zzb[i][j]);
        }
    }
    // ψ and ∂_Rψ as polynomials in (dT, dR, w).
    let psi_of = |dr: Jet| {
        let mut p = Jet::c(st.psi) + dt.scale(st.psi_t) + dr.scale(st.psi_r)
            + (dt * dt).scale(0.5 * d2.tt)
            + (dt * dr).scale(d2.tr)
            + (dr * dr).scale(0.5 * d2.rr);
        for i in 0..3 {
            p = p + w[i].scale(st.zpsi[i]) + (dt * w[i]).scale(d2.tz[i]) + (dr * w[i]).scale(d2.rz[i]);
            for j in 0..3 {
                p = p + (w[i] * w[j]).scale(0.5 * d2.zz[i][j]);
            }
        }
        p
    };
    let psi_r_of = |dr: Jet| {
        let mut p = Jet::c(st.psi_r) + dt.scale(d2.tr) + dr.scale(d2.rr);
        for (wi, rz) in w.iter().zip(d2.rz) {
            p = p + wi.scale(rz);
        }
        p
    };
    // Newton for (R−1)ψ(T, R, ω) = s − b; the value is exact from the start,
    // each step doubles the jet order that is correct.
    let mut dr = Jet::c(0.0);
    for _ in 0..3 {
        let rm1 = dr + Jet::c(st.r - 1.0);
        let f = rm1 * psi_of(dr) - (s - b);
        let fr = psi_of(dr) + rm1 * psi_r_of(dr);
        dr = dr - f / fr;
    }
    let phi = (s - b - psi_of(dr)).scale(b0);

    let (ph_t, ph_s) = (phi.g[0], phi.g[1]);
    let zph: [f64; 3] = std::array::from_fn(|i| phi.g[2 + i]);
    let (ph_tt, ph_ts, ph_ss) = (phi.h[0][0], phi.h[0][1], phi.h[1][1]);
    let q = ph_s - s0;
    let mut l = [ph_tt, 2.0 * q * ph_ts + 2.0 * ph_t, q * q * ph_ss - csq * (ph_ss + 2.0 / s0 * ph_s)];
    let mut zsq = 0.0;
    for i in 0..3 {
        l[1] += 2.0 / (s0 * s0) * zph[i] * phi.h[0][2 + i];
        l[2] += 2.0 * q / (s0 * s0) * zph[i] * phi.h[1][2 + i];
        l[2] -= csq / (s0 * s0) * phi.h[2 + i][2 + i];
        zsq += zph[i] * zph[i];
        for j in 0..3 {
            l[2] += zph[i] * zph[j] * phi.h[2 + i][2 + j] / s0.powi(4);
        }
    }
    l[2] += (2.0 * s0 - ph_s) / s0.powi(3) * zsq;
    let bern_arg = bern - phi.v - t0 * ph_t + s0 * ph_s - 0.5 * ph_s * ph_s - zsq / (2.0 * s0 * s0);
    (l, bern_arg)
}

fn random_state(rng: &mut StdRng) -> HodographState {
    let mut u = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    let mut st = HodographState {
        b: u(5.0, 50.0),
        b_t: u(-0.5, 0.5),
        b_tt: u(-0.5, 0.5),
        r: u(1.0, 2.0),
        psi: u(0.3, 2.0),
        psi_t: u(-0.5, 0.5),
        psi_r: u(-0.3, 0.3),
        ..Default::default()
    };
    for i in 0..3 {
        st.zb[i] = u(-0.5, 0.5);
        st.zb_t[i] = u(-0.5, 0.5);
        st.zpsi[i] = u(-0.5, 0.5);
        for j in 0..=i {
            let v = u(-0.5, 0.5);
            st.zzb[i][j] = v;
            st.zzb[j][i] = v;
        }
    }
    st
}

#[derive(Default)]
struct Worst {
    rel: f64,
    label: String,
}

impl Worst {
    fn check(&mut self, label: &str, formula: f64, oracle: f64, scale: f64) {
        let rel = (formula - oracle).abs() / scale;
        if rel > self.rel || rel.is_nan() {
            self.rel = if rel.is_nan() { f64::INFINITY } else { rel };
            self.label = format!("{label}: formula {formula:e}, oracle {oracle:e}");
        }
    }
}

#[test]
fn closed_forms_match_chain_rule_at_random_states() {
    let mut rng = StdRng::seed_from_u64(20240611);
    let mut worst = Worst::default();
    for _ in 0..100 {
        let st = random_state(&mut rng);
        let b0 = rng.gen_range(5.0..60.0);
        let csq = rng.gen_range(0.5..50.0);
        let t0 = rng.gen_range(0.5..3.0);
        let bern = 100.0;
        let set = coeffs_with_csq(&st, b0, 3, csq).unwrap();
        let factor = -b0 * set.a.a1;

        let zero = Second::default();
        let (base, bern_arg) = potential_equation(&st, &zero, b0, csq, t0, bern);
        let formula_arg = bernoulli_argument(b0, bern, t0, &st, st.psi, st.psi_t, st.psi_r);
        worst.check("A0", formula_arg, bern_arg, bern_arg.abs().max(1.0));

        let scale: [f64; 3] = std::array::from_fn(|j| base[j].abs().max(1.0));
        for j in 0..3 {
            worst.check(&format!("A7 layer {j}"), factor * set.a7[j], base[j], scale[j]);
        }
        let mut probe = |label: &str, d2: Second, formula: [f64; 3]| {
            let (l, _) = potential_equation(&st, &d2, b0, csq, t0, bern);
            for j in 0..3 {
                let coef = l[j] - base[j];
                worst.check(&format!("{label} layer {j}"), factor * formula[j], coef, scale[j].max(coef.abs()));
            }
        };
        probe("A1", Second { tt: 1.0, ..zero }, set.a1);
        probe("A2", Second { tr: 1.0, ..zero }, set.a2);
        probe("A4", Second { rr: 1.0, ..zero }, set.a4);
        for i in 0..3 {
            let mut tz = [0.0; 3];
            tz[i] = 1.0;
            probe(&format!("A3[{i}]"), Second { tz, ..zero }, std::array::from_fn(|k| set.a3[k][i]));
            probe(&format!("A5[{i}]"), Second { rz: tz, ..zero }, std::array::from_fn(|k| set.a5[k][i]));
            for j in 0..3 {
                let mut zz = [[0.0; 3]; 3];
                zz[i][j] = 1.0;
                zz[j][i] = 1.0;
                let f: [f64; 3] = std::array::from_fn(|k| {
                    if i == j {
                        set.a6[k][i][i]
                    } else {
                        set.a6[k][i][j] + set.a6[k][j][i]
                    }
                });
                probe(&format!("A6[{i}][{j}]"), Second { zz, ..zero }, f);
            }
        }
    }
    println!("worst relative discrepancy {:e} ({})", worst.rel, worst.label);
    assert!(worst.rel < 1e-8, "worst relative discrepancy {:e} at {}", worst.rel, worst.label);
}
