//! Primal-dual interior point solver for the discretized AQR problem.
//!
//! After quadrature the objective is a weighted check-function regression on
//! `L * m` pseudo-observations. Observation `(l, k)` has response `y_l`,
//! design row `pi(t_k) ⊗ x1_l`, level `tau_k` and weight `c_l * kappa_k`. The
//! solver works on the bounded dual
//!
//! ```text
//! max y'a   s.t.  Z'a = Z'(w (1 - tau)),  0 <= a <= w
//! ```
//!
//! with Mehrotra predictor-corrector steps. All products with `Z` go through
//! the Kronecker structure so no `L * m` by `p` matrix is ever formed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Per-record data: responses, covariate rows with a leading 1, weights.
pub(crate) struct Design<'a> {
    pub y: &'a [f64],
    /// Row-major `n_rec x p1`.
    pub x1: &'a [f64],
    pub weight: &'a [f64],
    pub p1: usize,
}

impl Design<'_> {
    pub fn n_rec(&self) -> usize {
        self.y.len()
    }

    fn row(&self, l: usize) -> &[f64] {
        &self.x1[l * self.p1..(l + 1) * self.p1]
    }
}

/// Quadrature pseudo-levels for one grid quantile.
pub(crate) struct Levels {
    /// Powers `t_k^e` for `e = 0..=2s`, row-major `m x (2s + 1)`.
    pub tpow: Vec<f64>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub s: usize,
    /// `pi_j(t_k)`, row-major `m x (s + 1)`.
    pub pi: Vec<f64>,
}

impl Levels {
    pub fn m(&self) -> usize {
        self.kappa.len()
    }

    pub fn new(tpow: Vec<f64>, kappa: Vec<f64>, tau: Vec<f64>, s: usize) -> Self {
        let ne = 2 * s + 1;
        let m = kappa.len();
        let mut pi = Vec::with_capacity(m * (s + 1));
        for k in 0..m {
            for j in 0..=s {
                pi.push(tpow[k * ne + j] / factorial(j));
            }
        }
        Self {
            tpow,
            kappa,
            tau,
            s,
            pi,
        }
    }

    #[inline]
    fn pi_row(&self, k: usize) -> &[f64] {
        &self.pi[k * (self.s + 1)..(k + 1) * (self.s + 1)]
    }
}

pub(crate) fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LpOptions {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    /// Coefficients in the rescaled coordinates.
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub gap: f64,
    pub objective: f64,
}

struct Work<'a> {
    d: &'a Design<'a>,
    lv: &'a Levels,
    s1: usize,
    p: usize,
    ne: usize,
}

impl Work<'_> {
    /// Per-record polynomial coefficients `c_j = x1_l' coef_j`.
    #[inline]
    fn record_coef(&self, l: usize, coef: &[f64], c: &mut [f64]) {
        let x = self.d.row(l);
        let p1 = self.d.p1;
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = x.iter().zip(&coef[j * p1..(j + 1) * p1]).map(|(a, b)| a * b).sum();
        }
    }

    #[inline]
    fn fit_at(&self, k: usize, c: &[f64]) -> f64 {
        self.lv.pi_row(k).iter().zip(c).map(|(p, cj)| p * cj).sum()
    }

    #[inline]
    fn add_pi(&self, k: usize, f: f64, g: &mut [f64]) {
        for (gj, p) in g.iter_mut().zip(self.lv.pi_row(k)) {
            *gj += f * p;
        }
    }

    #[inline]
    fn add_moments(&self, k: usize, f: f64, mu: &mut [f64]) {
        let tp = &self.lv.tpow[k * self.ne..(k + 1) * self.ne];
        for (me, t) in mu.iter_mut().zip(tp) {
            *me += f * t;
        }
    }

    /// `out += g ⊗ x1_l`.
    #[inline]
    fn scatter(&self, l: usize, g: &[f64], out: &mut [f64]) {
        let x = self.d.row(l);
        let p1 = self.d.p1;
        for (j, gj) in g.iter().enumerate() {
            for (o, xd) in out[j * p1..(j + 1) * p1].iter_mut().zip(x) {
                *o += gj * xd;
            }
        }
    }

    /// `acc_e += mu_e x1_l x1_l'` (upper triangle).
    #[inline]
    fn scatter_moments(&self, l: usize, mu: &[f64], acc: &mut [f64]) {
        let x = self.d.row(l);
        let p1 = self.d.p1;
        for (e, me) in mu.iter().enumerate() {
            let base = e * p1 * p1;
            for a in 0..p1 {
                let f = me * x[a];
                for b in a..p1 {
                    acc[base + a * p1 + b] += f * x[b];
                }
            }
        }
    }

    /// `Z' diag(q) Z` from accumulated moment matrices.
    fn assemble_gram(&self, acc: &[f64]) -> DMatrix<f64> {
        let p1 = self.d.p1;
        let mut g = DMatrix::zeros(self.p, self.p);
        for j in 0..self.s1 {
            for jj in 0..self.s1 {
                let scale = 1.0 / (factorial(j) * factorial(jj));
                let base = (j + jj) * p1 * p1;
                for a in 0..p1 {
                    for b in 0..p1 {
                        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                        g[(j * p1 + a, jj * p1 + b)] = acc[base + lo * p1 + hi] * scale;
                    }
                }
            }
        }
        g
    }
}

/// Cholesky factor of a symmetric positive semidefinite matrix, adding a
/// small ridge if the plain factorization fails.
fn spd_factor(g: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if let Some(ch) = g.clone().cholesky() {
        return Some(ch);
    }
    let diag_max = (0..g.nrows()).map(|i| g[(i, i)].abs()).fold(0.0, f64::max);
    let mut ridge = diag_max * 1e-12 + f64::MIN_POSITIVE;
    for _ in 0..8 {
        let mut gr = g.clone();
        for i in 0..gr.nrows() {
            gr[(i, i)] += ridge;
        }
        if let Some(ch) = gr.cholesky() {
            return Some(ch);
        }
        ridge *= 100.0;
    }
    None
}

fn chol_solve(ch: &Cholesky<f64, Dyn>, rhs: &[f64]) -> Option<Vec<f64>> {
    let x = ch.solve(&DVector::from_column_slice(rhs));
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}

/// Largest admissible step for `x + t dx >= 0`.
#[inline]
fn ratio(t: &mut f64, x: f64, dx: f64) {
    if dx < 0.0 {
        *t = t.min(-x / dx);
    }
}

const BETA: f64 = 0.99995;

/// Restriction of the problem to a band of pseudo-observations. Those outside
/// the band are held at a fixed residual sign and enter through the linear
/// term `ell' coef + constant`.
pub(crate) struct Band {
    pub mask: Vec<bool>,
    pub ell: Vec<f64>,
    pub constant: f64,
}

pub(crate) fn solve(
    d: &Design,
    lv: &Levels,
    opts: &LpOptions,
    alpha: f64,
    band: Option<&Band>,
) -> Result<LpSolution> {
    let s1 = lv.s + 1;
    let p1 = d.p1;
    let p = s1 * p1;
    let m = lv.m();
    let ne = 2 * lv.s + 1;
    let n_rec = d.n_rec();
    let n = n_rec * m;
    let wk = Work { d, lv, s1, p, ne };
    let tau = &lv.tau;
    let full_mask;
    let mask: &[bool] = match band {
        Some(b) => &b.mask,
        None => {
            full_mask = vec![true; n];
            &full_mask
        }
    };
    let rec_on: Vec<bool> = (0..n_rec)
        .map(|l| mask[l * m..(l + 1) * m].iter().any(|&x| x))
        .collect();
    let n_on = mask.iter().filter(|&&x| x).count().max(1);

    let mut acc = vec![0.0; ne * p1 * p1];
    let mut rhs = vec![0.0; p];
    let mut za = vec![0.0; p];
    let mut mu_l = vec![0.0; ne];
    let mut g = vec![0.0; s1];
    let mut g2 = vec![0.0; s1];
    let mut c = vec![0.0; s1];

    // weighted least squares start; c0 = Z'(w (1 - tau))
    let mut c0 = vec![0.0; p];
    for l in 0..n_rec {
        if !rec_on[l] {
            continue;
        }
        mu_l.fill(0.0);
        g.fill(0.0);
        g2.fill(0.0);
        for k in 0..m {
            if !mask[l * m + k] {
                continue;
            }
            let wi = d.weight[l] * lv.kappa[k];
            wk.add_moments(k, wi, &mut mu_l);
            wk.add_pi(k, wi * d.y[l], &mut g);
            wk.add_pi(k, wi * (1.0 - tau[k]), &mut g2);
        }
        wk.scatter_moments(l, &mu_l, &mut acc);
        wk.scatter(l, &g, &mut rhs);
        wk.scatter(l, &g2, &mut c0);
    }
    if let Some(b) = band {
        for (c, e) in c0.iter_mut().zip(&b.ell) {
            *c += e;
        }
    }
    let mut coef = spd_factor(&wk.assemble_gram(&acc))
        .and_then(|ch| chol_solve(&ch, &rhs))
        .ok_or_else(|| Error::SingularDesign("design matrix is rank deficient".into()))?;


    let mut a = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut da = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut dv = vec![0.0; n];

    let wtot: f64 = d.weight.iter().sum();
    let ybar = d.y.iter().zip(d.weight).map(|(y, c)| y * c).sum::<f64>() / wtot;
    let yscale = d
        .y
        .iter()
        .zip(d.weight)
        .map(|(y, c)| c * (y - ybar).abs())
        .sum::<f64>()
        / wtot;
    let kappa_sum: f64 = lv.kappa.iter().sum();
    let abs_floor = 1e-14 * wtot * kappa_sum * (yscale + ybar.abs()) + f64::MIN_POSITIVE;

    let mut abs_r = 0.0;
    for l in 0..n_rec {
        if !rec_on[l] {
            continue;
        }
        wk.record_coef(l, &coef, &mut c);
        for k in 0..m {
            let i = l * m + k;
            if !mask[i] {
                continue;
            }
            let wi = d.weight[l] * lv.kappa[k];
            r[i] = d.y[l] - wk.fit_at(k, &c);
            abs_r += r[i].abs();
            a[i] = wi * (1.0 - tau[k]);
            s[i] = wi * tau[k];
        }
    }
    let delta = 0.5 * abs_r / n_on as f64 + 1e-3 * yscale + 1e-12 * (ybar.abs() + 1.0);
    for i in 0..n {
        u[i] = (-r[i]).max(0.0) + delta;
        v[i] = r[i].max(0.0) + delta;
    }

    let mut pending: Option<(f64, f64)> = None;
    let mut best = (f64::INFINITY, coef.clone(), f64::INFINITY);
    for iter in 0..opts.max_iter {
        // apply the pending step, then residuals, gap, scaling, Gram matrix
        // and predictor right-hand side in one sweep
        acc.fill(0.0);
        rhs.fill(0.0);
        za.fill(0.0);
        let mut obj = 0.0;
        let mut gap_primal = 0.0;
        for l in 0..n_rec {
            if !rec_on[l] {
                continue;
            }
            wk.record_coef(l, &coef, &mut c);
            mu_l.fill(0.0);
            g.fill(0.0);
            g2.fill(0.0);
            let y = d.y[l];
            for k in 0..m {
                let i = l * m + k;
                if !mask[i] {
                    continue;
                }
                let wi = d.weight[l] * lv.kappa[k];
                if let Some((tp, td)) = pending {
                    a[i] += tp * da[i];
                    s[i] -= tp * da[i];
                    if s[i] <= 0.0 || a[i] <= 0.0 {
                        // keep the pair strictly interior after cancellation
                        let floor = wi * f64::EPSILON * 1e-3;
                        if s[i] <= 0.0 {
                            s[i] = floor;
                            a[i] = wi - floor;
                        } else {
                            a[i] = floor;
                            s[i] = wi - floor;
                        }
                    }
                    u[i] += td * du[i];
                    v[i] += td * dv[i];
                }
                let ri = y - wk.fit_at(k, &c);
                r[i] = ri;
                let loss = wi * crate::math::check_loss(tau[k], ri);
                obj += loss;
                gap_primal += loss - ri * (a[i] - wi * (1.0 - tau[k]));
                let qi = 1.0 / (u[i] / a[i] + v[i] / s[i]);
                q[i] = qi;
                wk.add_moments(k, qi, &mut mu_l);
                wk.add_pi(k, qi * ri, &mut g);
                wk.add_pi(k, a[i], &mut g2);
            }
            wk.scatter_moments(l, &mu_l, &mut acc);
            wk.scatter(l, &g, &mut rhs);
            wk.scatter(l, &g2, &mut za);
        }

        if let Some(b) = band {
            obj += b.constant + b.ell.iter().zip(&coef).map(|(e, c)| e * c).sum::<f64>();
        }
        let rel = gap_primal.max(0.0) / (obj.abs() + abs_floor);
        if obj < best.0 || rel < best.2 {
            best = (obj, coef.clone(), rel);
        }
        if rel <= opts.tol || gap_primal <= abs_floor {
            return Ok(LpSolution {
                coef,
                iterations: iter,
                gap: rel,
                objective: obj,
            });
        }

        // primal residual c0 - Z'a enters both right-hand sides
        let pr: Vec<f64> = c0.iter().zip(&za).map(|(c, z)| c - z).collect();
        let Some(ch) = spd_factor(&wk.assemble_gram(&acc)) else {
            break;
        };
        for (x, y) in rhs.iter_mut().zip(&pr) {
            *x -= y;
        }
        let Some(db) = chol_solve(&ch, &rhs) else {
            break;
        };

        // predictor direction, step lengths and the terms of the affine gap
        let (mut tp, mut td) = (f64::INFINITY, f64::INFINITY);
        let (mut gap, mut s1_, mut s2_, mut s3_) = (0.0, 0.0, 0.0, 0.0);
        for l in 0..n_rec {
            if !rec_on[l] {
                continue;
            }
            wk.record_coef(l, &db, &mut c);
            for k in 0..m {
                let i = l * m + k;
                if !mask[i] {
                    continue;
                }
                let (ai, si, ui, vi) = (a[i], s[i], u[i], v[i]);
                let dai = q[i] * (r[i] - wk.fit_at(k, &c));
                da[i] = dai;
                let dua = -ui - ui * dai / ai;
                let dva = -vi + vi * dai / si;
                ratio(&mut tp, ai, dai);
                ratio(&mut tp, si, -dai);
                ratio(&mut td, ui, dua);
                ratio(&mut td, vi, dva);
                gap += ai * ui + si * vi;
                s1_ += dai * (ui - vi);
                s2_ += ai * dua + si * dva;
                s3_ += dai * (dua - dva);
            }
        }
        let tp = (BETA * tp).min(1.0);
        let td = (BETA * td).min(1.0);
        let gap_aff = gap + tp * s1_ + td * s2_ + tp * td * s3_;
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);
        let mu = sigma * gap / (2 * n_on) as f64;

        // corrector right-hand side
        rhs.fill(0.0);
        for l in 0..n_rec {
            if !rec_on[l] {
                continue;
            }
            g.fill(0.0);
            for k in 0..m {
                let i = l * m + k;
                if !mask[i] {
                    continue;
                }
                let rho = corrector_rho(a[i], s[i], u[i], v[i], r[i], da[i], mu).0;
                wk.add_pi(k, q[i] * rho, &mut g);
            }
            wk.scatter(l, &g, &mut rhs);
        }
        for (x, y) in rhs.iter_mut().zip(&pr) {
            *x -= y;
        }
        let Some(db) = chol_solve(&ch, &rhs) else {
            break;
        };

        // corrected direction
        let (mut tp, mut td) = (f64::INFINITY, f64::INFINITY);
        for l in 0..n_rec {
            if !rec_on[l] {
                continue;
            }
            wk.record_coef(l, &db, &mut c);
            for k in 0..m {
                let i = l * m + k;
                if !mask[i] {
                    continue;
                }
                let (ai, si, ui, vi) = (a[i], s[i], u[i], v[i]);
                let (rho, ca, cs) = corrector_rho(ai, si, ui, vi, r[i], da[i], mu);
                let dai = q[i] * (rho - wk.fit_at(k, &c));
                let dui = (ca - ui * dai) / ai;
                let dvi = (cs + vi * dai) / si;
                da[i] = dai;
                du[i] = dui;
                dv[i] = dvi;
                ratio(&mut tp, ai, dai);
                ratio(&mut tp, si, -dai);
                ratio(&mut td, ui, dui);
                ratio(&mut td, vi, dvi);
            }
        }
        let tp = (BETA * tp).min(1.0);
        let td = (BETA * td).min(1.0);
        for (cf, dc) in coef.iter_mut().zip(&db) {
            *cf += td * dc;
        }
        pending = Some((tp, td));
    }
    let (obj, coef_best, rel) = best;
    if rel <= opts.tol.sqrt() * 1e-2 {
        // stalled very close to optimal; accept
        return Ok(LpSolution {
            coef: coef_best,
            iterations: opts.max_iter,
            gap: rel,
            objective: obj,
        });
    }
    Err(Error::NonConvergence {
        alpha,
        iterations: opts.max_iter,
        gap: rel,
        last_iterate: coef_best,
    })
}

/// Corrector residual and complementarity targets given the affine step `da`.
#[inline]
fn corrector_rho(a: f64, s: f64, u: f64, v: f64, r: f64, da: f64, mu: f64) -> (f64, f64, f64) {
    let dua = -u - u * da / a;
    let dva = -v + v * da / s;
    let ca = mu - a * u - da * dua;
    let cs = mu - s * v + da * dva;
    (r + u - v + ca / a - cs / s, ca, cs)
}

/// Coefficients of the local polynomial re-centred by `delta` in the
/// rescaled argument.
pub(crate) fn shift_coef(coef: &[f64], s: usize, p1: usize, delta: f64) -> Vec<f64> {
    let mut out = vec![0.0; coef.len()];
    for i in 0..=s {
        for j in i..=s {
            let f = delta.powi((j - i) as i32) / factorial(j - i);
            for d in 0..p1 {
                out[i * p1 + d] += coef[j * p1 + d] * f;
            }
        }
    }
    out
}

/// Solve using `guess` to predict residual signs. Pseudo-observations far
/// from the predicted fit are folded into a linear term; the band grows until
/// the folded signs hold at the solution, which then solves the full problem.
pub(crate) fn solve_guided(
    d: &Design,
    lv: &Levels,
    opts: &LpOptions,
    alpha: f64,
    guess: Option<&[f64]>,
) -> Result<LpSolution> {
    let m = lv.m();
    let n_rec = d.n_rec();
    let n = n_rec * m;
    let s1 = lv.s + 1;
    let p = s1 * d.p1;
    let wk = Work {
        d,
        lv,
        s1,
        p,
        ne: 2 * lv.s + 1,
    };
    let weight = |i: usize| d.weight[i / m] * lv.kappa[i % m];
    let base: Vec<bool> = (0..n).map(|i| weight(i) > 0.0).collect();
    let full = |base: Vec<bool>| {
        solve(
            d,
            lv,
            opts,
            alpha,
            Some(&Band {
                mask: base,
                ell: vec![0.0; p],
                constant: 0.0,
            }),
        )
    };
    let n_base = base.iter().filter(|&&x| x).count();
    let target = (3.0 * ((n_base * p) as f64).sqrt()).max(20.0 * p as f64) as usize;
    let Some(guess) = guess else {
        return full(base);
    };
    if 2 * target >= n_base {
        return full(base);
    }

    let residuals = |coef: &[f64]| {
        let mut r = vec![0.0; n];
        let mut c = vec![0.0; s1];
        for l in 0..n_rec {
            wk.record_coef(l, coef, &mut c);
            for k in 0..m {
                r[l * m + k] = d.y[l] - wk.fit_at(k, &c);
            }
        }
        r
    };
    let rhat = residuals(guess);
    let mut abs: Vec<f64> = (0..n).filter(|&i| base[i]).map(|i| rhat[i].abs()).collect();
    let (_, &mut mut thr, _) = abs.select_nth_unstable_by(target, f64::total_cmp);
    let mut forced = vec![false; n];
    let mut iterations = 0;
    for _ in 0..4 {
        let mask: Vec<bool> = (0..n)
            .map(|i| base[i] && (forced[i] || rhat[i].abs() <= thr))
            .collect();
        let mut ell = vec![0.0; p];
        let mut constant = 0.0;
        let mut g = vec![0.0; s1];
        for l in 0..n_rec {
            g.fill(0.0);
            let mut any = false;
            for k in 0..m {
                let i = l * m + k;
                if !base[i] || mask[i] {
                    continue;
                }
                any = true;
                let (wi, t) = (weight(i), lv.tau[k]);
                // positive residual: w tau (y - z'b); negative: w (1 - tau) (z'b - y)
                let f = if rhat[i] > 0.0 { -wi * t } else { wi * (1.0 - t) };
                constant -= f * d.y[l];
                wk.add_pi(k, f, &mut g);
            }
            if any {
                wk.scatter(l, &g, &mut ell);
            }
        }
        let band = Band {
            mask,
            ell,
            constant,
        };
        let sol = match solve(d, lv, opts, alpha, Some(&band)) {
            Ok(sol) => sol,
            Err(Error::NonConvergence { .. }) | Err(Error::SingularDesign(_)) => break,
            Err(e) => return Err(e),
        };
        iterations += sol.iterations;
        let r = residuals(&sol.coef);
        let mut excess = 0.0;
        let mut n_viol = 0;
        for i in 0..n {
            if base[i] && !band.mask[i] && (r[i] > 0.0) != (rhat[i] > 0.0) && r[i] != 0.0 {
                excess += weight(i) * r[i].abs();
                forced[i] = true;
                n_viol += 1;
            }
        }
        let scale = sol.objective.abs() + f64::MIN_POSITIVE;
        if n_viol == 0 || excess <= 0.1 * opts.tol * scale {
            return Ok(LpSolution {
                iterations,
                gap: sol.gap + excess / scale,
                objective: sol.objective + excess,
                ..sol
            });
        }
        thr *= 2.0;
    }
    let mut sol = full(base)?;
    sol.iterations += iterations;
    Ok(sol)
}
