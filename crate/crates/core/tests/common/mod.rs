#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warped_soliton::ode::{SolitonOdeParams, TrajectoryState};
use warped_soliton::{parse_expr, Expr, FiberSpec, SolitonSpec};

/// Ridders' extrapolated central difference. Returns the derivative and an
/// error estimate.
pub fn ridders(f: impl Fn(f64) -> f64, x: f64, h0: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 10;
    const SAFE: f64 = 2.0;
    let mut a = [[0.0; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let mut best = a[0][0];
    let mut err = f64::INFINITY;
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i]).abs().max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= SAFE * err {
            break;
        }
    }
    (best, err)
}

/// Full curvature tensors in the adapted orthonormal frame, assembled
/// index by index from the warping functions. Frame index 0 is `d/ds`.
pub struct Dense {
    pub n: usize,
    /// First frame index of each fiber.
    pub start: Vec<usize>,
    pub riem: Vec<f64>,
    pub ric: Vec<f64>,
    pub scalar: f64,
    pub schouten: Vec<f64>,
    pub einstein: Vec<f64>,
    pub weyl: Vec<f64>,
    pub d: Vec<f64>,
    pub fprime: f64,
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Dense {
    pub fn new(spec: &SolitonSpec, s: f64) -> Dense {
        let n = spec.n;
        let mut owner = vec![usize::MAX; n];
        let mut start = Vec::new();
        let mut next = 1;
        for (j, fb) in spec.fibers.iter().enumerate() {
            start.push(next);
            owner[next..next + fb.dim].fill(j);
            next += fb.dim;
        }
        let warp: Vec<[f64; 3]> = spec
            .warps
            .iter()
            .map(|w| {
                let j = w.eval_jet::<2>(s).unwrap();
                [j.v(), j.d1(), j.d2()]
            })
            .collect();
        let fprime = spec.potential.eval_jet::<1>(s).unwrap().d1();

        // Sectional curvature of the plane spanned by frame vectors i != j.
        let sectional = |i: usize, j: usize| -> f64 {
            let (i, j) = (i.min(j), i.max(j));
            if i == 0 {
                let [h, _, hpp] = warp[owner[j]];
                return -hpp / h;
            }
            let (a, b) = (owner[i], owner[j]);
            let [ha, hpa, _] = warp[a];
            if a == b {
                (spec.fibers[a].k - hpa * hpa) / (ha * ha)
            } else {
                let [hb, hpb, _] = warp[b];
                -hpa * hpb / (ha * hb)
            }
        };

        let i4 = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
        let mut riem = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let k = sectional(i, j);
                    riem[i4(i, j, i, j)] = k;
                    riem[i4(i, j, j, i)] = -k;
                }
            }
        }
        let mut ric = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                ric[i * n + k] = (0..n).map(|j| riem[i4(i, j, k, j)]).sum();
            }
        }
        let scalar: f64 = (0..n).map(|i| ric[i * n + i]).sum();
        let nf = n as f64;
        let schouten: Vec<f64> = (0..n * n)
            .map(|x| ric[x] - scalar / (2.0 * (nf - 1.0)) * delta(x / n, x % n))
            .collect();
        let einstein: Vec<f64> = (0..n * n)
            .map(|x| ric[x] - scalar / 2.0 * delta(x / n, x % n))
            .collect();
        let a = |i: usize, j: usize| schouten[i * n + j];
        let e = |i: usize, j: usize| einstein[i * n + j];
        let mut weyl = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        weyl[i4(i, j, k, l)] = riem[i4(i, j, k, l)]
                            - (a(i, k) * delta(j, l) + a(j, l) * delta(i, k)
                                - a(i, l) * delta(j, k)
                                - a(j, k) * delta(i, l))
                                / (nf - 2.0);
                    }
                }
            }
        }
        let grad = |l: usize| if l == 0 { fprime } else { 0.0 };
        let mut d = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = (a(i, j) * grad(k) - a(i, k) * grad(j)) / (nf - 2.0);
                    for l in 0..n {
                        v += (delta(i, j) * e(k, l) - delta(i, k) * e(j, l)) * grad(l)
                            / ((nf - 1.0) * (nf - 2.0));
                    }
                    d[(i * n + j) * n + k] = v;
                }
            }
        }
        Dense {
            n,
            start,
            riem,
            ric,
            scalar,
            schouten,
            einstein,
            weyl,
            d,
            fprime,
        }
    }

    pub fn w(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.weyl[((i * n + j) * n + k) * n + l]
    }

    pub fn d(&self, i: usize, j: usize, k: usize) -> f64 {
        self.d[(i * self.n + j) * self.n + k]
    }

    pub fn ric(&self, i: usize, j: usize) -> f64 {
        self.ric[i * self.n + j]
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.schouten[i * self.n + j]
    }
}

/// `C_{a1a} = A_{a1,a} - A_{aa,1} = xi (A_11 - A_aa) - d/ds A_aa` for the
/// first frame vector of fiber `j`, with the radial derivative taken by
/// finite differences of the dense Schouten tensor.
pub fn cotton_a1a(spec: &SolitonSpec, s: f64, j: usize, h0: f64) -> f64 {
    let dense = Dense::new(spec, s);
    let a = dense.start[j];
    let w = spec.warps[j].eval_jet::<1>(s).unwrap();
    let xi = w.d1() / w.v();
    let (daa, _) = ridders(|t| Dense::new(spec, t).a(a, a), s, h0);
    xi * (dense.a(0, 0) - dense.a(a, a)) - daa
}

/// Leading terms of the smooth steady soliton closing up at `s = 0` with a
/// round `S^(n-1)` fiber, normalized so that `R(0) = 1`.
pub fn bryant_init(n: usize, s0: f64) -> (SolitonOdeParams, TrajectoryState) {
    let m = (n - 1) as f64;
    let b = -1.0 / (2.0 * n as f64);
    let a = b / (3.0 * m);
    let p = SolitonOdeParams::new(n, 0.0, vec![FiberSpec::new(n - 1, 1.0, true)]).unwrap();
    let init = TrajectoryState {
        s: s0,
        h: vec![s0 + a * s0.powi(3)],
        w: vec![1.0 + 3.0 * a * s0 * s0],
        f: b * s0 * s0,
        v: 2.0 * b * s0,
    };
    (p, init)
}

fn num(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> String {
    format!("{:.3}", rng.gen_range(lo..hi))
}

/// Expression that stays positive for `s > 0`.
fn positive(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 {
        return if rng.gen_bool(0.6) {
            "s".into()
        } else {
            num(rng, 0.5, 3.0)
        };
    }
    match rng.gen_range(0..7) {
        0 => format!("({})+({})", positive(rng, depth - 1), positive(rng, depth - 1)),
        1 => format!("({})*({})", positive(rng, depth - 1), positive(rng, depth - 1)),
        2 => format!("({})/({})", positive(rng, depth - 1), positive(rng, depth - 1)),
        3 => format!("({})^{}", positive(rng, depth - 1), num(rng, -2.0, 2.0)),
        4 => format!("exp({})", any(rng, depth - 1)),
        5 => format!("({})^({})", positive(rng, depth - 1), any(rng, depth - 1)),
        _ => positive(rng, 0),
    }
}

fn any(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 {
        return positive(rng, 0);
    }
    match rng.gen_range(0..5) {
        0 => format!("({})-({})", any(rng, depth - 1), any(rng, depth - 1)),
        1 => format!("-({})", any(rng, depth - 1)),
        2 => format!("log({})", positive(rng, depth - 1)),
        3 => format!("({})*({})", any(rng, depth - 1), any(rng, depth - 1)),
        _ => positive(rng, depth),
    }
}

/// 1000 expressions whose value and first four derivatives stay moderate on
/// `[0.5, 2]`, each paired with an evaluation point.
pub fn expression_corpus() -> Vec<(String, Expr, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    while out.len() < 1000 {
        let text = any(&mut rng, 4);
        let s = rng.gen_range(0.6..1.9);
        let e = parse_expr(&text).unwrap_or_else(|err| panic!("{text}: {err}"));
        let ok = [s - 0.1, s, s + 0.1].iter().all(|&t| {
            e.eval_jet::<4>(t)
                .map(|j| j.derivatives().iter().all(|d| d.abs() < 1e6))
                .unwrap_or(false)
        });
        if ok {
            out.push((text, e, s));
        }
    }
    out
}
