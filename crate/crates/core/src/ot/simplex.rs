//! Exact transportation solver: primal network simplex on the bipartite
//! graph of atoms.
//!
//! Sources and sinks hang off an artificial root through big-M arcs, which
//! gives an initial strongly feasible spanning tree. Entering arcs are chosen
//! by block search over reduced costs; the leaving arc is the last blocking
//! arc met when walking the pivot cycle from its apex, which keeps the tree
//! strongly feasible and rules out cycling on degenerate pivots. All arcs are
//! uncapacitated.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::DiscreteMeasure;
use crate::numeric::{pow_cost, root_cost, CompensatedSum};
use crate::ot::check_exponent;

/// Default bound on `|supp mu| + |supp nu|` for the exact solver.
pub const DEFAULT_ATOM_LIMIT: usize = 2000;

/// Tolerance of the optimality certificate.
const CERTIFICATE_TOL: f64 = 1e-7;

const NONE: usize = usize::MAX;

/// An optimal coupling between two discrete measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    /// `(source point, target point, mass)` with positive mass.
    pub entries: Vec<(usize, usize, f64)>,
    /// Total transport cost `sum mass * d^p`.
    pub cost: f64,
}

impl TransportPlan {
    /// The `[[i, j, mass], ...]` export format.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.entries
                .iter()
                .map(|&(i, j, m)| serde_json::json!([i, j, m]))
                .collect(),
        )
    }
}

/// Result of [`solve_transport`], indexed by position in the supply and
/// demand vectors.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub flows: Vec<(usize, usize, f64)>,
    pub cost: f64,
    /// Dual potentials with `u[i] + v[j] <= cost[i][j]`.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Exact `w_p(mu, nu)` and an optimal plan, with the default atom limit.
pub fn exact_wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
) -> Result<(f64, TransportPlan)> {
    exact_wasserstein_with_limit(mu, nu, p, DEFAULT_ATOM_LIMIT)
}

pub fn exact_wasserstein_with_limit(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    atom_limit: usize,
) -> Result<(f64, TransportPlan)> {
    check_exponent(p)?;
    mu.require_same_space(nu)?;
    let atoms = mu.len() + nu.len();
    if atoms > atom_limit {
        return Err(Error::AtomLimit {
            atoms,
            limit: atom_limit,
        });
    }
    let space = mu.space();
    let (src, dst) = (mu.atoms(), nu.atoms());
    let supply: Vec<f64> = src.iter().map(|a| a.1).collect();
    let demand: Vec<f64> = dst.iter().map(|a| a.1).collect();
    let mut cost = Vec::with_capacity(src.len() * dst.len());
    for &(i, _) in src {
        for &(j, _) in dst {
            cost.push(pow_cost(space.dist(i, j), p));
        }
    }
    let solution = solve_transport(&supply, &demand, &cost)?;
    let entries = solution
        .flows
        .iter()
        .map(|&(a, b, m)| (src[a].0, dst[b].0, m))
        .collect();
    let plan = TransportPlan {
        entries,
        cost: solution.cost,
    };
    Ok((root_cost(solution.cost.max(0.0), p), plan))
}

/// Solves the balanced transportation problem with a row-major cost matrix
/// of shape `supply.len() x demand.len()`.
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    if cost.len() != m * n {
        return Err(Error::InvalidParameter(format!(
            "cost matrix has {} entries, expected {}",
            cost.len(),
            m * n
        )));
    }
    if let Some(bad) = supply.iter().chain(demand).find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(format!("marginal weight {bad}")));
    }
    if let Some(bad) = cost.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter(format!("cost entry {bad}")));
    }
    let total_supply: f64 = supply.iter().sum();
    let total_demand: f64 = demand.iter().sum();
    if (total_supply - total_demand).abs() > 1e-9 * total_supply.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "unbalanced marginals: {total_supply} vs {total_demand}"
        )));
    }

    let mut simplex = NetworkSimplex::new(supply, demand, cost);
    simplex.run()?;
    simplex.solution(supply, demand)
}

struct NetworkSimplex<'a> {
    m: usize,
    n: usize,
    cost: &'a [f64],
    big_m: f64,
    eps: f64,
    root: usize,
    flow: Vec<f64>,
    parent: Vec<usize>,
    pred_arc: Vec<usize>,
    depth: Vec<usize>,
    potential: Vec<f64>,
    children: Vec<Vec<usize>>,
    next_arc: usize,
    block_size: usize,
}

impl<'a> NetworkSimplex<'a> {
    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let max_cost = cost.iter().copied().fold(0.0, f64::max);
        let big_m = 1.0 + max_cost * (m + n) as f64;
        let root = m + n;
        let real_arcs = m * n;
        let mut flow = vec![0.0; real_arcs + m + n];
        let mut parent = vec![root; m + n + 1];
        let mut pred_arc = vec![NONE; m + n + 1];
        let mut depth = vec![1; m + n + 1];
        let mut potential = vec![0.0; m + n + 1];
        parent[root] = NONE;
        depth[root] = 0;
        for i in 0..m {
            let arc = real_arcs + i;
            pred_arc[i] = arc;
            flow[arc] = supply[i];
            potential[i] = -big_m;
        }
        for j in 0..n {
            let arc = real_arcs + m + j;
            pred_arc[m + j] = arc;
            flow[arc] = demand[j];
            potential[m + j] = big_m;
        }
        let mut children = vec![Vec::new(); m + n + 1];
        children[root] = (0..m + n).collect();
        let block_size = ((real_arcs as f64).sqrt().ceil() as usize).max(10).min(real_arcs);
        Self {
            m,
            n,
            cost,
            big_m,
            eps: 1e-12 * max_cost.max(f64::MIN_POSITIVE),
            root,
            flow,
            parent,
            pred_arc,
            depth,
            potential,
            children,
            next_arc: 0,
            block_size,
        }
    }

    /// Tail, head and cost of an arc.
    #[inline]
    fn arc(&self, arc: usize) -> (usize, usize, f64) {
        let real = self.m * self.n;
        if arc < real {
            (arc / self.n, self.m + arc % self.n, self.cost[arc])
        } else if arc < real + self.m {
            (arc - real, self.root, self.big_m)
        } else {
            (self.root, self.m + (arc - real - self.m), self.big_m)
        }
    }

    #[inline]
    fn reduced_cost(&self, arc: usize) -> f64 {
        let (u, v, c) = self.arc(arc);
        c + self.potential[u] - self.potential[v]
    }

    /// Block search for an eligible entering arc among the real arcs.
    fn find_entering(&mut self) -> Option<usize> {
        let total = self.m * self.n;
        let mut best = NONE;
        let mut best_rc = -self.eps;
        let mut scanned_in_block = 0;
        for _ in 0..total {
            let arc = self.next_arc;
            self.next_arc += 1;
            if self.next_arc == total {
                self.next_arc = 0;
            }
            let rc = self.reduced_cost(arc);
            if rc < best_rc && self.pred_arc[arc / self.n] != arc && self.pred_arc[self.m + arc % self.n] != arc {
                best_rc = rc;
                best = arc;
            }
            scanned_in_block += 1;
            if scanned_in_block == self.block_size {
                if best != NONE {
                    return Some(best);
                }
                scanned_in_block = 0;
            }
        }
        (best != NONE).then_some(best)
    }

    fn run(&mut self) -> Result<()> {
        let limit = 50 * (self.m * self.n + self.m + self.n) + 10_000;
        let mut pivots = 0usize;
        loop {
            while let Some(arc) = self.find_entering() {
                self.pivot(arc);
                pivots += 1;
                if pivots > limit {
                    return Err(Error::InvalidParameter(format!(
                        "network simplex exceeded {limit} pivots"
                    )));
                }
            }
            // Potentials drift through incremental updates; recompute them
            // from the tree and stop only if no arc is eligible afterwards.
            self.recompute_potentials();
            if self.find_entering().is_none() {
                return Ok(());
            }
        }
    }

    fn pivot(&mut self, entering: usize) {
        let (u_in, v_in, _) = self.arc(entering);

        // Apex of the cycle.
        let (mut a, mut b) = (u_in, v_in);
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
            } else {
                b = self.parent[b];
            }
        }
        let join = a;

        // Cycle orientation: u_in -> v_in, up from v_in to the apex, down
        // from the apex to u_in.
        let mut delta = f64::INFINITY;
        let mut leaving_node = NONE;
        let mut leaving_on_first = true;
        let mut w = u_in;
        while w != join {
            let arc = self.pred_arc[w];
            // Walking down, an upward-oriented arc is traversed backwards.
            if self.arc(arc).0 == w && self.flow[arc] < delta {
                delta = self.flow[arc];
                leaving_node = w;
                leaving_on_first = true;
            }
            w = self.parent[w];
        }
        let mut w = v_in;
        while w != join {
            let arc = self.pred_arc[w];
            // Walking up, a downward-oriented arc is traversed backwards.
            if self.arc(arc).1 == w && self.flow[arc] <= delta {
                delta = self.flow[arc];
                leaving_node = w;
                leaving_on_first = false;
            }
            w = self.parent[w];
        }
        debug_assert!(leaving_node != NONE, "unbounded pivot cycle");

        if delta > 0.0 {
            let mut w = u_in;
            while w != join {
                let arc = self.pred_arc[w];
                if self.arc(arc).0 == w {
                    self.flow[arc] -= delta;
                } else {
                    self.flow[arc] += delta;
                }
                w = self.parent[w];
            }
            let mut w = v_in;
            while w != join {
                let arc = self.pred_arc[w];
                if self.arc(arc).1 == w {
                    self.flow[arc] -= delta;
                } else {
                    self.flow[arc] += delta;
                }
                w = self.parent[w];
            }
        }
        self.flow[entering] = delta;
        let leaving_arc = self.pred_arc[leaving_node];
        self.flow[leaving_arc] = 0.0;

        // Re-hang the subtree cut off by the leaving arc below the other end
        // of the entering arc.
        let (new_root, new_parent) = if leaving_on_first {
            (u_in, v_in)
        } else {
            (v_in, u_in)
        };
        let mut path = vec![new_root];
        while *path.last().unwrap() != leaving_node {
            let last = *path.last().unwrap();
            path.push(self.parent[last]);
        }
        let old_pred: Vec<usize> = path.iter().map(|&x| self.pred_arc[x]).collect();
        remove_child(&mut self.children[self.parent[leaving_node]], leaving_node);
        for t in 0..path.len() - 1 {
            remove_child(&mut self.children[path[t + 1]], path[t]);
        }
        for t in (1..path.len()).rev() {
            self.parent[path[t]] = path[t - 1];
            self.pred_arc[path[t]] = old_pred[t - 1];
            self.children[path[t - 1]].push(path[t]);
        }
        self.parent[new_root] = new_parent;
        self.pred_arc[new_root] = entering;
        self.children[new_parent].push(new_root);

        let (u, v, c) = self.arc(entering);
        let target = if new_root == u {
            self.potential[v] - c
        } else {
            self.potential[u] + c
        };
        let shift = target - self.potential[new_root];
        let base_depth = self.depth[new_parent] + 1;
        self.depth[new_root] = base_depth;
        self.potential[new_root] = target;
        let mut stack: Vec<usize> = self.children[new_root].clone();
        while let Some(x) = stack.pop() {
            self.depth[x] = self.depth[self.parent[x]] + 1;
            self.potential[x] += shift;
            stack.extend_from_slice(&self.children[x]);
        }
    }

    fn recompute_potentials(&mut self) {
        self.potential[self.root] = 0.0;
        let mut stack = self.children[self.root].clone();
        while let Some(x) = stack.pop() {
            let (u, v, c) = self.arc(self.pred_arc[x]);
            self.potential[x] = if x == v {
                self.potential[u] + c
            } else {
                self.potential[v] - c
            };
            stack.extend_from_slice(&self.children[x]);
        }
    }

    fn solution(&self, supply: &[f64], demand: &[f64]) -> Result<TransportSolution> {
        let (m, n) = (self.m, self.n);
        let artificial: f64 = self.flow[m * n..].iter().sum();
        if artificial > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "infeasible transport: {artificial} mass left on artificial arcs"
            )));
        }
        let mut flows = Vec::new();
        let mut total = CompensatedSum::new();
        let mut worst_slack: f64 = 0.0;
        for arc in 0..m * n {
            let rc = self.reduced_cost(arc);
            worst_slack = worst_slack.min(rc);
            let f = self.flow[arc];
            if f > 0.0 {
                flows.push((arc / n, arc % n, f));
                total.add(f * self.cost[arc]);
                worst_slack = worst_slack.min(-rc.abs());
            }
        }
        let cost = total.value();
        let scale = self.cost.iter().copied().fold(1.0, f64::max);
        let u: Vec<f64> = (0..m).map(|i| -self.potential[i]).collect();
        let v: Vec<f64> = (0..n).map(|j| self.potential[m + j]).collect();
        let dual: CompensatedSum = supply
            .iter()
            .zip(&u)
            .map(|(a, x)| a * x)
            .chain(demand.iter().zip(&v).map(|(b, y)| b * y))
            .collect();
        let gap = (dual.value() - cost).abs();
        if worst_slack < -CERTIFICATE_TOL * scale || gap > CERTIFICATE_TOL * scale {
            return Err(Error::InvalidParameter(format!(
                "optimality certificate failed: slack {worst_slack}, duality gap {gap}"
            )));
        }
        Ok(TransportSolution { flows, cost, u, v })
    }
}

fn remove_child(children: &mut Vec<usize>, child: usize) {
    let position = children
        .iter()
        .position(|&c| c == child)
        .expect("tree child lists out of sync");
    children.swap_remove(position);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn cloud(points: Vec<Vec<f64>>) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::point_cloud(&points).unwrap())
    }

    #[test]
    fn dirac_pair() {
        let space = cloud(vec![vec![0.0], vec![3.0]]);
        let a = DiscreteMeasure::dirac(space.clone(), 0).unwrap();
        let b = DiscreteMeasure::dirac(space, 1).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let (w, plan) = exact_wasserstein(&a, &b, p).unwrap();
            assert!((w - 3.0).abs() < 1e-12);
            assert_eq!(plan.entries, vec![(0, 1, 1.0)]);
        }
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let space = cloud((0..12).map(|_| vec![rng.random(), rng.random()]).collect());
        let atoms: Vec<(usize, f64)> = (0..12).map(|i| (i, rng.random_range(0.1..1.0))).collect();
        let mu = DiscreteMeasure::from_masses(space, &atoms).unwrap();
        let (w, _) = exact_wasserstein(&mu, &mu, 2.0).unwrap();
        assert!(w.abs() < 1e-12);
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut next = perm.clone();
                next.insert(pos, n - 1);
                out.push(next);
            }
        }
        out
    }

    #[test]
    fn uniform_six_atoms_match_best_permutation() {
        // Between uniform measures with equal atom counts an optimal plan is
        // a permutation (Birkhoff), so enumerating all 720 is an oracle.
        let perms = permutations(6);
        assert_eq!(perms.len(), 720);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let space = cloud((0..12).map(|_| vec![rng.random(), rng.random()]).collect());
            let mu = DiscreteMeasure::uniform(space.clone(), &(0..6).collect::<Vec<_>>()).unwrap();
            let nu = DiscreteMeasure::uniform(space.clone(), &(6..12).collect::<Vec<_>>()).unwrap();
            for p in [1.0, 2.0] {
                let best = perms
                    .iter()
                    .map(|perm| {
                        perm.iter()
                            .enumerate()
                            .map(|(i, &j)| pow_cost(space.dist(i, 6 + j), p))
                            .sum::<f64>()
                            / 6.0
                    })
                    .fold(f64::INFINITY, f64::min);
                let (w, plan) = exact_wasserstein(&mu, &nu, p).unwrap();
                assert!((w - root_cost(best, p)).abs() < 1e-10, "{w} vs {}", root_cost(best, p));
                assert!((plan.cost - best).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn plan_marginals_and_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let space = cloud((0..60).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect());
        let mu_atoms: Vec<(usize, f64)> = (0..25).map(|i| (i, rng.random_range(0.01..1.0))).collect();
        let nu_atoms: Vec<(usize, f64)> = (25..60).map(|i| (i, rng.random_range(0.01..1.0))).collect();
        let mu = DiscreteMeasure::from_masses(space.clone(), &mu_atoms).unwrap();
        let nu = DiscreteMeasure::from_masses(space.clone(), &nu_atoms).unwrap();
        let (_, plan) = exact_wasserstein(&mu, &nu, 2.0).unwrap();
        for &(i, w) in mu.atoms() {
            let row: f64 = plan.entries.iter().filter(|e| e.0 == i).map(|e| e.2).sum();
            assert!((row - w).abs() < 1e-9);
        }
        for &(j, w) in nu.atoms() {
            let col: f64 = plan.entries.iter().filter(|e| e.1 == j).map(|e| e.2).sum();
            assert!((col - w).abs() < 1e-9);
        }
        let direct: f64 = plan.entries.iter().map(|&(i, j, m)| m * space.dist(i, j).powi(2)).sum();
        assert!((direct - plan.cost).abs() < 1e-12);
        // Basic solutions have at most m + n - 1 positive entries.
        assert!(plan.entries.len() < 25 + 35);
    }

    #[test]
    fn atom_limit_guard() {
        let space = cloud((0..10).map(|i| vec![i as f64]).collect());
        let mu = DiscreteMeasure::uniform(space.clone(), &[0, 1, 2, 3, 4]).unwrap();
        let nu = DiscreteMeasure::uniform(space, &[5, 6, 7, 8, 9]).unwrap();
        assert!(matches!(
            exact_wasserstein_with_limit(&mu, &nu, 1.0, 9),
            Err(Error::AtomLimit { atoms: 10, limit: 9 })
        ));
        assert!(exact_wasserstein_with_limit(&mu, &nu, 1.0, 10).is_ok());
    }

    #[test]
    fn mismatched_spaces() {
        let a = DiscreteMeasure::dirac(cloud(vec![vec![0.0]]), 0).unwrap();
        let b = DiscreteMeasure::dirac(cloud(vec![vec![0.0]]), 0).unwrap();
        assert!(matches!(exact_wasserstein(&a, &b, 1.0), Err(Error::SpaceMismatch)));
    }

    #[test]
    fn degenerate_equal_weights_on_grid() {
        // Many ties in cost and weight; exercises degenerate pivots.
        let pts: Vec<Vec<f64>> = (0..8)
            .flat_map(|x| (0..8).map(move |y| vec![x as f64, y as f64]))
            .collect();
        let space = cloud(pts);
        let mu = DiscreteMeasure::uniform(space.clone(), &(0..32).collect::<Vec<_>>()).unwrap();
        let nu = DiscreteMeasure::uniform(space, &(32..64).collect::<Vec<_>>()).unwrap();
        let (w, _) = exact_wasserstein(&mu, &nu, 1.0).unwrap();
        // Shifting x by 4 is feasible, and the x-marginals alone already need
        // transport distance 4.
        assert!((w - 4.0).abs() < 1e-9, "{w}");
    }

    #[test]
    fn duals_are_feasible() {
        let supply = [0.2, 0.5, 0.3];
        let demand = [0.6, 0.4];
        let cost = [1.0, 4.0, 2.0, 0.5, 3.0, 1.0];
        let sol = solve_transport(&supply, &demand, &cost).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!(sol.u[i] + sol.v[j] <= cost[i * 2 + j] + 1e-9);
            }
        }
        // With a = flow(1 -> 1) and arcs (0 -> 1) unused, the cost is
        // 1.3 + 0.5 a over a in [0.1, 0.4], minimized at a = 0.1.
        let expected = 0.2 * 1.0 + 0.4 * 2.0 + 0.1 * 0.5 + 0.3 * 1.0;
        assert!((sol.cost - expected).abs() < 1e-12, "{}", sol.cost);
    }
}
