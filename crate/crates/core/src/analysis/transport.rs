//! Exact optimal transport between two small discrete distributions by the
//! transportation simplex (north-west corner start, MODI potentials, Bland's
//! rule).

use serde::Serialize;

use crate::error::{invalid_param, Result};

/// Supplies `a`, demands `b` and a cost matrix `cost[i][j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportInstance {
    pub supply: Vec<f64>,
    pub demand: Vec<f64>,
    pub cost: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransportSolution {
    pub cost: f64,
    pub flow: Vec<Vec<f64>>,
    pub pivots: usize,
}

const TOTAL_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 10_000;

impl TransportInstance {
    fn validate(&self) -> Result<()> {
        let (m, n) = (self.supply.len(), self.demand.len());
        if m == 0 || n == 0 {
            return Err(invalid_param("transport needs non-empty supply and demand"));
        }
        if self.cost.len() != m || self.cost.iter().any(|r| r.len() != n) {
            return Err(invalid_param("cost matrix shape does not match supply × demand"));
        }
        if self
            .supply
            .iter()
            .chain(&self.demand)
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(invalid_param("supplies and demands must be finite and ≥ 0"));
        }
        if self.cost.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid_param("costs must be finite"));
        }
        let (sa, sb): (f64, f64) = (self.supply.iter().sum(), self.demand.iter().sum());
        if (sa - sb).abs() > TOTAL_TOL {
            return Err(invalid_param(format!("unbalanced transport: {sa} vs {sb}")));
        }
        Ok(())
    }

    fn cost_of(&self, flow: &[Vec<f64>]) -> f64 {
        flow.iter()
            .zip(&self.cost)
            .flat_map(|(f, c)| f.iter().zip(c).map(|(x, y)| x * y))
            .sum()
    }
}

/// Path between row `i` and column `j` in the basis tree, as basic cells in
/// order starting at row `i`. Rows are nodes `0..m`, columns `m..m+n`.
fn tree_path(basis: &[(usize, usize)], m: usize, n: usize, i: usize, j: usize) -> Vec<(usize, usize)> {
    let mut adj = vec![Vec::new(); m + n];
    for (e, &(r, c)) in basis.iter().enumerate() {
        adj[r].push((m + c, e));
        adj[m + c].push((r, e));
    }
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    let mut stack = vec![i];
    seen[i] = true;
    while let Some(u) = stack.pop() {
        for &(w, e) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((u, e));
                stack.push(w);
            }
        }
    }
    let mut path = Vec::new();
    let mut u = m + j;
    while u != i {
        let (p, e) = parent[u].expect("basis is a spanning tree");
        path.push(basis[e]);
        u = p;
    }
    path.reverse();
    path
}

fn potentials(inst: &TransportInstance, basis: &[(usize, usize)]) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let mut u: Vec<Option<f64>> = vec![None; m];
    let mut v: Vec<Option<f64>> = vec![None; n];
    u[0] = Some(0.0);
    let mut changed = true;
    while changed {
        changed = false;
        for &(r, c) in basis {
            match (u[r], v[c]) {
                (Some(a), None) => {
                    v[c] = Some(inst.cost[r][c] - a);
                    changed = true;
                }
                (None, Some(b)) => {
                    u[r] = Some(inst.cost[r][c] - b);
                    changed = true;
                }
                _ => {}
            }
        }
    }
    (
        u.into_iter().map(|x| x.expect("connected basis")).collect(),
        v.into_iter().map(|x| x.expect("connected basis")).collect(),
    )
}

/// Minimum-cost transport plan.
pub fn solve_transport(inst: &TransportInstance) -> Result<TransportSolution> {
    inst.validate()?;
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let mut flow = vec![vec![0.0; n]; m];
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut a, mut b) = (inst.supply.clone(), inst.demand.clone());
    let (mut i, mut j) = (0, 0);
    loop {
        let x = a[i].min(b[j]);
        flow[i][j] = x;
        a[i] -= x;
        b[j] -= x;
        basis.push((i, j));
        if i == m - 1 && j == n - 1 {
            break;
        }
        // When row and column run out together, advance only the row so the
        // basis keeps m + n − 1 cells.
        if j == n - 1 || (i < m - 1 && a[i] <= b[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    // Leftover from an imbalance within tolerance stays in the last cell.
    flow[m - 1][n - 1] += a[m - 1].max(b[n - 1]);

    let scale = inst.cost.iter().flatten().fold(1.0f64, |s, c| s.max(c.abs()));
    let eps = 1e-12 * scale;
    let mut pivots = 0;
    loop {
        let (u, v) = potentials(inst, &basis);
        let entering = (0..m)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .find(|&(r, c)| !basis.contains(&(r, c)) && inst.cost[r][c] - u[r] - v[c] < -eps);
        let Some((er, ec)) = entering else { break };
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(invalid_param("transport simplex did not terminate"));
        }
        let path = tree_path(&basis, m, n, er, ec);
        // Path cells alternate −, +, −, … starting at the entering row.
        let leaving = path
            .iter()
            .step_by(2)
            .copied()
            .min_by(|p, q| {
                flow[p.0][p.1]
                    .partial_cmp(&flow[q.0][q.1])
                    .unwrap()
                    .then((p.0 * n + p.1).cmp(&(q.0 * n + q.1)))
            })
            .expect("cycle has a decreasing cell");
        let theta = flow[leaving.0][leaving.1];
        for (k, &(r, c)) in path.iter().enumerate() {
            if k % 2 == 0 {
                flow[r][c] -= theta;
            } else {
                flow[r][c] += theta;
            }
        }
        flow[er][ec] += theta;
        flow[leaving.0][leaving.1] = 0.0;
        let pos = basis.iter().position(|&c| c == leaving).unwrap();
        basis[pos] = (er, ec);
    }
    for row in &mut flow {
        for x in row.iter_mut() {
            *x = x.max(0.0);
        }
    }
    Ok(TransportSolution {
        cost: inst.cost_of(&flow),
        flow,
        pivots,
    })
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    let mut y = x;
    while parent[y] != r {
        let next = parent[y];
        parent[y] = r;
        y = next;
    }
    r
}

/// Flows of the basic solution on a spanning tree of cells, by peeling
/// leaves. `None` if some flow is negative.
fn tree_flows(inst: &TransportInstance, cells: &[(usize, usize)]) -> Option<Vec<Vec<f64>>> {
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let mut rest: Vec<f64> = inst.supply.iter().chain(&inst.demand).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &(r, c) in cells {
        degree[r] += 1;
        degree[m + c] += 1;
    }
    let mut used = vec![false; cells.len()];
    let mut flow = vec![vec![0.0; n]; m];
    for _ in 0..cells.len() {
        let (e, leaf) = cells.iter().enumerate().find_map(|(e, &(r, c))| {
            if used[e] {
                None
            } else if degree[r] == 1 {
                Some((e, r))
            } else if degree[m + c] == 1 {
                Some((e, m + c))
            } else {
                None
            }
        })?;
        let (r, c) = cells[e];
        let other = if leaf == r { m + c } else { r };
        let x = rest[leaf];
        if x < -1e-12 {
            return None;
        }
        flow[r][c] = x;
        rest[leaf] = 0.0;
        rest[other] -= x;
        degree[r] -= 1;
        degree[m + c] -= 1;
        used[e] = true;
    }
    Some(flow)
}

/// Minimum cost over all basic feasible solutions, by enumerating every set
/// of `m + n − 1` cells forming a spanning tree. Exponential; for checking
/// the simplex on small instances only.
pub fn transport_brute_force(inst: &TransportInstance) -> Result<f64> {
    inst.validate()?;
    let (m, n) = (inst.supply.len(), inst.demand.len());
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let chosen: Vec<(usize, usize)> = pick.iter().map(|&p| cells[p]).collect();
        let mut parent: Vec<usize> = (0..m + n).collect();
        let acyclic = chosen.iter().all(|&(r, c)| {
            let (x, y) = (find(&mut parent, r), find(&mut parent, m + c));
            if x == y {
                false
            } else {
                parent[x] = y;
                true
            }
        });
        if acyclic {
            if let Some(flow) = tree_flows(inst, &chosen) {
                best = best.min(inst.cost_of(&flow));
            }
        }
        // Next k-subset in lexicographic order.
        let mut i = k;
        while i > 0 && pick[i - 1] == cells.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for t in i..k {
            pick[t] = pick[t - 1] + 1;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    fn random_instance(m: usize, n: usize, seed: u64, sparse: bool) -> TransportInstance {
        let mut rng = stream(seed, 0, 0, 0);
        let mut draw = |k: usize| -> Vec<f64> {
            let mut w: Vec<f64> = (0..k)
                .map(|_| if sparse && rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() })
                .collect();
            if w.iter().sum::<f64>() == 0.0 {
                w[0] = 1.0;
            }
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        let supply = draw(m);
        let mut demand = draw(n);
        let diff = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
        let big = (0..n).max_by(|&a, &b| demand[a].total_cmp(&demand[b])).unwrap();
        demand[big] += diff;
        let cost = (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(0..4) as f64).collect())
            .collect();
        TransportInstance { supply, demand, cost }
    }

    #[test]
    fn simplex_matches_vertex_enumeration() {
        for seed in 0..40 {
            let inst = random_instance(4, 4, seed, seed % 2 == 0);
            let s = solve_transport(&inst).unwrap();
            let b = transport_brute_force(&inst).unwrap();
            assert!((s.cost - b).abs() < 1e-9, "seed {seed}: {} vs {b}", s.cost);
        }
        for seed in 100..103 {
            let inst = random_instance(5, 5, seed, seed == 101);
            let s = solve_transport(&inst).unwrap();
            let b = transport_brute_force(&inst).unwrap();
            assert!((s.cost - b).abs() < 1e-9, "seed {seed}: {} vs {b}", s.cost);
        }
    }

    #[test]
    fn plan_is_feasible() {
        for seed in 0..20 {
            let inst = random_instance(7, 6, seed, true);
            let s = solve_transport(&inst).unwrap();
            for (i, row) in s.flow.iter().enumerate() {
                assert!((row.iter().sum::<f64>() - inst.supply[i]).abs() < 1e-12);
            }
            for j in 0..6 {
                let col: f64 = s.flow.iter().map(|r| r[j]).sum();
                assert!((col - inst.demand[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shifted_copy_costs_the_shift() {
        // The same law on a line, shifted by one: every unit moves once.
        let p = vec![0.2, 0.5, 0.3];
        let cost: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| ((i as f64) - (j as f64 + 1.0)).abs()).collect())
            .collect();
        let s = solve_transport(&TransportInstance {
            supply: p.clone(),
            demand: p.clone(),
            cost,
        })
        .unwrap();
        assert!((s.cost - 1.0).abs() < 1e-15);
        let same: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| ((i as f64) - (j as f64)).abs()).collect())
            .collect();
        let z = solve_transport(&TransportInstance {
            supply: p.clone(),
            demand: p,
            cost: same,
        })
        .unwrap();
        assert!(z.cost.abs() < 1e-15);
    }

    #[test]
    fn rejects_unbalanced() {
        let inst = TransportInstance {
            supply: vec![0.5],
            demand: vec![0.6],
            cost: vec![vec![1.0]],
        };
        assert!(solve_transport(&inst).is_err());
    }
}
