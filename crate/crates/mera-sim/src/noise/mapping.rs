//! Ion-to-qubit assignment minimizing a predicted-error proxy.

use super::NoiseCalibration;
use crate::error::{Error, Result};
use crate::gates::{Circuit, GateKind};
use crate::rng::stream;
use rand::seq::SliceRandom;
use std::f64::consts::FRAC_PI_2;

pub const EXHAUSTIVE_MAX_QUBITS: usize = 8;

/// Proxy split into per-qubit linear terms and per-pair X-flip terms.
struct Proxy {
    n_qubits: usize,
    n_ions: usize,
    /// linear[q][i]: cost of putting qubit q on ion i
    linear: Vec<Vec<f64>>,
    /// (a, b, weight) for every entangling gate
    pairs: Vec<(usize, usize, f64)>,
    p_x: Vec<Vec<f64>>,
    p_x_min: f64,
}

impl Proxy {
    fn new(circuit: &Circuit, cal: &NoiseCalibration, n_ions: usize) -> Result<Self> {
        if n_ions < circuit.n_qubits || n_ions > cal.n_ions {
            return Err(Error::InvalidInput(format!(
                "need n_qubits ({}) ≤ n_ions ({n_ions}) ≤ calibrated ions ({})",
                circuit.n_qubits, cal.n_ions
            )));
        }
        let eps: Vec<f64> = (0..n_ions).map(|i| cal.kappa() * cal.b[i] * cal.b[i] * cal.n_bar_0).collect();
        let mut w_eps = vec![0.0; circuit.n_qubits];
        let mut w_sig = vec![0.0; circuit.n_qubits];
        let mut pairs = Vec::new();
        for op in circuit.lowered().ops {
            let w = op.theta.abs() / FRAC_PI_2;
            match op.kind {
                GateKind::R => w_eps[op.targets[0]] += w,
                GateKind::XX => {
                    for &q in &op.targets {
                        w_eps[q] += w;
                        w_sig[q] += w;
                    }
                    pairs.push((op.targets[0], op.targets[1], w));
                }
                _ => {}
            }
        }
        let linear = (0..circuit.n_qubits)
            .map(|q| (0..n_ions).map(|i| w_eps[q] * eps[i] + w_sig[q] * cal.sigma_phi_of(i)).collect())
            .collect();
        let p_x: Vec<Vec<f64>> = (0..n_ions)
            .map(|i| {
                (0..n_ions)
                    .map(|j| if i == j { f64::INFINITY } else { cal.p_x_half_pi(i, j).unwrap_or(f64::INFINITY) })
                    .collect()
            })
            .collect();
        let p_x_min = p_x.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { n_qubits: circuit.n_qubits, n_ions, linear, pairs, p_x, p_x_min })
    }

    fn cost(&self, ions: &[usize]) -> f64 {
        let lin: f64 = ions.iter().enumerate().map(|(q, &i)| self.linear[q][i]).sum();
        let pair: f64 = self.pairs.iter().map(|&(a, b, w)| 2.0 * w * self.p_x[ions[a]][ions[b]]).sum();
        lin + pair
    }
}

/// Σ over native gates of |θ|/(π/2) × (ε_i + ε_j + σ_φ,i + σ_φ,j + 2 p_X,ij) for
/// entangling gates and |θ|/(π/2) × ε_i for single-qubit rotations, with ε at n̄₀.
pub fn mapping_proxy(circuit: &Circuit, cal: &NoiseCalibration, ions: &[usize]) -> Result<f64> {
    let n_ions = cal.n_ions;
    if ions.len() != circuit.n_qubits || ions.iter().any(|&i| i >= n_ions) {
        return Err(Error::InvalidInput("mapping must give one ion per qubit".into()));
    }
    Ok(Proxy::new(circuit, cal, n_ions)?.cost(ions))
}

/// Branch and bound over all injective assignments.
pub fn exhaustive_mapping(circuit: &Circuit, cal: &NoiseCalibration, n_ions: usize) -> Result<Vec<usize>> {
    let px = Proxy::new(circuit, cal, n_ions)?;
    let n = px.n_qubits;
    // heaviest qubits first
    let mut order: Vec<usize> = (0..n).collect();
    let spread = |q: usize| px.linear[q].iter().copied().fold(0.0, f64::max);
    order.sort_by(|&a, &b| spread(b).total_cmp(&spread(a)).then(a.cmp(&b)));
    let mut best = (f64::INFINITY, vec![0; n]);
    let mut assign = vec![usize::MAX; n];
    let mut used = vec![false; px.n_ions];

    struct Ctx<'a> {
        px: &'a Proxy,
        order: &'a [usize],
    }
    fn bound(ctx: &Ctx, assign: &[usize], used: &[bool], depth: usize) -> f64 {
        let lin: f64 = ctx.order[depth..]
            .iter()
            .map(|&q| {
                (0..ctx.px.n_ions).filter(|&i| !used[i]).map(|i| ctx.px.linear[q][i]).fold(f64::INFINITY, f64::min)
            })
            .sum();
        let (mut fixed, mut open) = (0.0, 0.0);
        for &(a, b, w) in &ctx.px.pairs {
            if assign[a] != usize::MAX && assign[b] != usize::MAX {
                fixed += 2.0 * w * ctx.px.p_x[assign[a]][assign[b]];
            } else {
                open += 2.0 * w;
            }
        }
        lin + fixed + open * ctx.px.p_x_min
    }
    fn dfs(
        ctx: &Ctx,
        depth: usize,
        partial: f64,
        assign: &mut [usize],
        used: &mut [bool],
        best: &mut (f64, Vec<usize>),
    ) {
        if depth == ctx.order.len() {
            let c = ctx.px.cost(assign);
            if c < best.0 {
                *best = (c, assign.to_vec());
            }
            return;
        }
        let q = ctx.order[depth];
        let mut cands: Vec<usize> = (0..ctx.px.n_ions).filter(|&i| !used[i]).collect();
        cands.sort_by(|&a, &b| ctx.px.linear[q][a].total_cmp(&ctx.px.linear[q][b]).then(a.cmp(&b)));
        for i in cands {
            assign[q] = i;
            used[i] = true;
            let lin = partial + ctx.px.linear[q][i];
            if lin + bound(ctx, assign, used, depth + 1) < best.0 {
                dfs(ctx, depth + 1, lin, assign, used, best);
            }
            used[i] = false;
            assign[q] = usize::MAX;
        }
    }
    let ctx = Ctx { px: &px, order: &order };
    dfs(&ctx, 0, 0.0, &mut assign, &mut used, &mut best);
    if best.0.is_infinite() {
        return Err(Error::Calibration("no assignment has calibrated X-flip rates for every entangling pair".into()));
    }
    Ok(best.1)
}

fn local_search(px: &Proxy, ions: &mut Vec<usize>) -> f64 {
    let mut cost = px.cost(ions);
    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let free: Vec<usize> = (0..px.n_ions).filter(|i| !ions.contains(i)).collect();
        for a in 0..px.n_qubits {
            for b in a + 1..px.n_qubits {
                let mut t = ions.clone();
                t.swap(a, b);
                let c = px.cost(&t);
                if c < cost - 1e-15 && best.as_ref().is_none_or(|x| c < x.0) {
                    best = Some((c, t));
                }
            }
            for &f in &free {
                let mut t = ions.clone();
                t[a] = f;
                let c = px.cost(&t);
                if c < cost - 1e-15 && best.as_ref().is_none_or(|x| c < x.0) {
                    best = Some((c, t));
                }
            }
        }
        match best {
            Some((c, t)) => {
                cost = c;
                *ions = t;
            }
            None => return cost,
        }
    }
}

/// Greedy construction followed by swap/move local search, plus seeded
/// random restarts.
pub fn greedy_mapping(circuit: &Circuit, cal: &NoiseCalibration, n_ions: usize, seed: u64) -> Result<Vec<usize>> {
    let px = Proxy::new(circuit, cal, n_ions)?;
    let n = px.n_qubits;
    let mut order: Vec<usize> = (0..n).collect();
    let spread = |q: usize| px.linear[q].iter().copied().fold(0.0, f64::max);
    order.sort_by(|&a, &b| spread(b).total_cmp(&spread(a)).then(a.cmp(&b)));
    let mut start = vec![usize::MAX; n];
    let mut used = vec![false; n_ions];
    for &q in &order {
        let i = (0..n_ions)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| px.linear[q][a].total_cmp(&px.linear[q][b]).then(a.cmp(&b)))
            .expect("enough ions");
        start[q] = i;
        used[i] = true;
    }
    let mut best = start.clone();
    let mut best_cost = local_search(&px, &mut best);
    let mut rng = stream(seed, 0);
    for _ in 0..4 {
        let mut perm: Vec<usize> = (0..n_ions).collect();
        perm.shuffle(&mut rng);
        let mut t: Vec<usize> = perm[..n].to_vec();
        let c = local_search(&px, &mut t);
        if c < best_cost {
            best_cost = c;
            best = t;
        }
    }
    if best_cost.is_infinite() {
        return Err(Error::Calibration("no assignment has calibrated X-flip rates for every entangling pair".into()));
    }
    Ok(best)
}

/// Qubit → ion assignment: exhaustive up to eight qubits, greedy beyond.
pub fn optimize_ion_mapping(circuit: &Circuit, cal: &NoiseCalibration, n_ions: usize, seed: u64) -> Result<Vec<usize>> {
    if circuit.n_qubits <= EXHAUSTIVE_MAX_QUBITS {
        exhaustive_mapping(circuit, cal, n_ions)
    } else {
        greedy_mapping(circuit, cal, n_ions, seed)
    }
}
