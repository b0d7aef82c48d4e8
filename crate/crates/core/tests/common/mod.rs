#![allow(dead_code)]

use horoflow::horosum::JQuery;
use horoflow::measure::BlMeasure;
use horoflow::sft::birkhoff_sum;
use horoflow::FlowModel;

/// Enumerates every preimage `y = c_{n-1} … c_0 x*` with `n <= n_max` and
/// sums `ψ(y)` over those meeting the constraints, in plain recursion.
pub fn brute_force_j(m: &FlowModel, blm: &BlMeasure, q: &JQuery) -> f64 {
    fn go(m: &FlowModel, blm: &BlMeasure, q: &JQuery, y: &mut Vec<usize>, n: usize, acc: &mut f64) {
        let r_n = birkhoff_sum(m.r(), y, n).unwrap();
        let f_n = birkhoff_sum(m.f(), y, n).unwrap();
        let s = r_n - q.t_sharp;
        let hit = q.e.alpha < q.e.beta
            && q.e.alpha <= s
            && s <= q.e.beta
            && f_n.iter().zip(&q.xi0).map(|(f, x)| f + x).eq(q.xi_star.iter().copied())
            && y.starts_with(&q.e.a);
        if hit {
            *acc += blm.psi(y);
        }
        if n == q.n_max {
            return;
        }
        let first = y[0];
        for c in m.ts().predecessors(first).collect::<Vec<_>>() {
            y.insert(0, c);
            go(m, blm, q, y, n + 1, acc);
            y.remove(0);
        }
    }
    let mut y = q.x_star.0.clone();
    let mut acc = 0.0;
    go(m, blm, q, &mut y, 0, &mut acc);
    acc
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}
