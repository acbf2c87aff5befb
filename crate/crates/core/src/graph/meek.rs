//! Orientation propagation (Meek's rules R1–R4) and CPDAG construction.

use super::{Dag, Pdag};

/// Whether one of R1–R4 forces the undirected edge `x – y` to become `x → y`.
fn forced(g: &Pdag, x: usize, y: usize) -> bool {
    let p = g.p;
    // R1: z → x – y, z and y not adjacent
    if (0..p).any(|z| g.d(z, x) && !g.adj(z, y)) {
        return true;
    }
    // R2: x → z → y
    if (0..p).any(|z| g.d(x, z) && g.d(z, y)) {
        return true;
    }
    // R3: x – z1 → y, x – z2 → y, z1 and z2 not adjacent
    let mids: Vec<usize> = (0..p).filter(|&z| g.u(x, z) && g.d(z, y)).collect();
    for (k, &z1) in mids.iter().enumerate() {
        if mids[k + 1..].iter().any(|&z2| !g.adj(z1, z2)) {
            return true;
        }
    }
    // R4: x – c, c → d → y, c and y not adjacent, x adjacent to d
    for c in 0..p {
        if !g.u(x, c) || g.adj(c, y) {
            continue;
        }
        if (0..p).any(|d| g.d(c, d) && g.d(d, y) && g.adj(x, d)) {
            return true;
        }
    }
    false
}

/// Applies R1–R4 until no rule fires. An orientation that would close a
/// directed cycle is never made, so the directed part stays acyclic whenever
/// it started acyclic.
pub fn meek_closure(g: &mut Pdag) {
    let p = g.p;
    loop {
        let mut changed = false;
        for x in 0..p {
            for y in 0..p {
                if g.u(x, y) && forced(g, x, y) && !g.reaches(y, x) {
                    g.orient(x, y);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// True when no rule of [`meek_closure`] can still fire.
pub fn is_meek_closed(g: &Pdag) -> bool {
    let p = g.p;
    !(0..p).any(|x| (0..p).any(|y| g.u(x, y) && forced(g, x, y) && !g.reaches(y, x)))
}

/// The completed PDAG of `dag`'s Markov equivalence class: the skeleton with
/// v-structures directed, closed under the orientation rules.
pub fn dag_to_cpdag(dag: &Dag) -> Pdag {
    let p = dag.p;
    let mut g = Pdag::empty(p);
    for (a, b) in dag.skeleton() {
        g.set_undirected(a - 1, b - 1);
    }
    for v in dag.v_structures() {
        g.orient(v.a - 1, v.c - 1);
        g.orient(v.b - 1, v.c - 1);
    }
    meek_closure(&mut g);
    g
}
