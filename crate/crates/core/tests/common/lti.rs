//! Independent reference solver: reduces a ladder network to an explicit
//! state-space model `z' = A z + q s(t)` and propagates it exactly with
//! matrix exponentials over each linear piece of the stimulus.
//!
//! Nothing here goes through the engine's MNA stamps or LU.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use xtalk_core::engine::Stimulus;
use xtalk_core::netbuild::{CoupledNetwork, SourceRef};

pub struct LtiModel {
    /// Non-ground node names after merging ideal ties.
    pub names: Vec<String>,
    /// Node id -> reduced index, `None` for ground (or tied to it).
    class: Vec<Option<usize>>,
    dynamic: Vec<usize>,
    algebraic: Vec<usize>,
    a: DMatrix<f64>,
    q: DVector<f64>,
    /// v_alg = out_z * z + out_s * s
    out_z: DMatrix<f64>,
    out_s: DVector<f64>,
    n_ind: usize,
}

fn root(parent: &mut Vec<usize>, mut x: usize) -> usize {
    while parent[x] != x {
        x = parent[x];
    }
    x
}

impl LtiModel {
    pub fn new(net: &CoupledNetwork) -> Self {
        let nn = net.nodes.len();
        let mut parent: Vec<usize> = (0..nn).collect();
        for r in net.resistors.iter().filter(|r| r.ohms == 0.0) {
            let (ra, rb) = (root(&mut parent, r.a.0), root(&mut parent, r.b.0));
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi] = lo;
        }
        let mut class = vec![None; nn];
        let mut names = Vec::new();
        let mut rep_index = vec![None; nn];
        for i in 1..nn {
            let r = root(&mut parent, i);
            if r == 0 {
                continue;
            }
            let idx = *rep_index[r].get_or_insert_with(|| {
                names.push(net.nodes[r].name.clone());
                names.len() - 1
            });
            class[i] = Some(idx);
        }
        let n = names.len();
        let b = net.inductors.len();

        let mut cap = DMatrix::<f64>::zeros(n, n);
        let mut g = DMatrix::<f64>::zeros(n, n);
        let mut beta = DVector::<f64>::zeros(n);
        let mut inc = DMatrix::<f64>::zeros(n, b);
        let stamp = |m: &mut DMatrix<f64>, a: Option<usize>, bb: Option<usize>, v: f64| {
            if let Some(i) = a {
                m[(i, i)] += v;
            }
            if let Some(j) = bb {
                m[(j, j)] += v;
            }
            if let (Some(i), Some(j)) = (a, bb) {
                m[(i, j)] -= v;
                m[(j, i)] -= v;
            }
        };
        for r in net.resistors.iter().filter(|r| r.ohms > 0.0) {
            stamp(&mut g, class[r.a.0], class[r.b.0], 1.0 / r.ohms);
        }
        for c in &net.capacitors {
            stamp(&mut cap, class[c.a.0], class[c.b.0], c.farads);
        }
        for d in &net.drivers {
            assert!(d.resistance > 0.0, "reference solver needs resistive drivers");
            let i = class[d.node.0].expect("driver on ground");
            g[(i, i)] += 1.0 / d.resistance;
            if d.source == SourceRef::Driven {
                beta[i] += 1.0 / d.resistance;
            }
        }
        for (j, l) in net.inductors.iter().enumerate() {
            if let Some(i) = class[l.a.0] {
                inc[(i, j)] += 1.0;
            }
            if let Some(i) = class[l.b.0] {
                inc[(i, j)] -= 1.0;
            }
        }
        let mut lm = DMatrix::<f64>::zeros(b, b);
        for (j, l) in net.inductors.iter().enumerate() {
            lm[(j, j)] = l.henries;
        }
        for m in &net.mutuals {
            lm[(m.branch_a, m.branch_b)] += m.henries;
            lm[(m.branch_b, m.branch_a)] += m.henries;
        }

        let dynamic: Vec<usize> = (0..n).filter(|&i| cap[(i, i)] > 0.0).collect();
        let algebraic: Vec<usize> = (0..n).filter(|&i| cap[(i, i)] == 0.0).collect();
        let (nd, na) = (dynamic.len(), algebraic.len());
        let pick = |m: &DMatrix<f64>, rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
        };
        let all_b: Vec<usize> = (0..b).collect();
        let c_dd = pick(&cap, &dynamic, &dynamic);
        let g_dd = pick(&g, &dynamic, &dynamic);
        let g_da = pick(&g, &dynamic, &algebraic);
        let g_ad = pick(&g, &algebraic, &dynamic);
        let g_aa = pick(&g, &algebraic, &algebraic);
        let a_d = pick(&inc, &dynamic, &all_b);
        let a_a = pick(&inc, &algebraic, &all_b);
        let beta_d = DVector::from_fn(nd, |i, _| beta[dynamic[i]]);
        let beta_a = DVector::from_fn(na, |i, _| beta[algebraic[i]]);

        // v_a = G_aa^-1 (beta_a s - G_ad v_d - A_a i)
        let g_aa_inv = g_aa.try_inverse().expect("algebraic block singular");
        let nz = nd + b;
        let mut out_z = DMatrix::<f64>::zeros(na, nz);
        out_z.view_mut((0, 0), (na, nd)).copy_from(&(-&g_aa_inv * &g_ad));
        out_z.view_mut((0, nd), (na, b)).copy_from(&(-&g_aa_inv * &a_a));
        let out_s = &g_aa_inv * &beta_a;

        // C_dd v_d' = -G_dd v_d - G_da v_a - A_d i + beta_d s
        // L i'      = A_d^T v_d + A_a^T v_a
        let mut rhs_v = DMatrix::<f64>::zeros(nd, nz);
        rhs_v.view_mut((0, 0), (nd, nd)).copy_from(&(-&g_dd));
        rhs_v.view_mut((0, nd), (nd, b)).copy_from(&(-&a_d));
        rhs_v += -&g_da * &out_z;
        let q_v = &beta_d - &g_da * &out_s;
        let mut rhs_i = DMatrix::<f64>::zeros(b, nz);
        rhs_i.view_mut((0, 0), (b, nd)).copy_from(&a_d.transpose());
        rhs_i += a_a.transpose() * &out_z;
        let q_i = a_a.transpose() * &out_s;

        let c_inv = c_dd.try_inverse().expect("capacitance block singular");
        let l_inv = lm.try_inverse().expect("inductance matrix singular");
        let mut a = DMatrix::<f64>::zeros(nz, nz);
        a.view_mut((0, 0), (nd, nz)).copy_from(&(&c_inv * rhs_v));
        a.view_mut((nd, 0), (b, nz)).copy_from(&(&l_inv * rhs_i));
        let mut q = DVector::<f64>::zeros(nz);
        q.rows_mut(0, nd).copy_from(&(&c_inv * q_v));
        q.rows_mut(nd, b).copy_from(&(&l_inv * q_i));

        Self {
            names,
            class,
            dynamic,
            algebraic,
            a,
            q,
            out_z,
            out_s,
            n_ind: b,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Augmented generator for `[z; s; ds/dt]` on a piece where `s` is linear.
    fn generator(&self) -> DMatrix<f64> {
        let nz = self.state_dim();
        let mut m = DMatrix::<f64>::zeros(nz + 2, nz + 2);
        m.view_mut((0, 0), (nz, nz)).copy_from(&self.a);
        m.view_mut((0, nz), (nz, 1)).copy_from(&self.q);
        m[(nz, nz + 1)] = 1.0;
        m
    }

    /// Node voltages (per reduced node) sampled at `k * dt`, `k = 0..=steps`.
    /// The stimulus must start at 0 V and its slope may only change at the
    /// listed `breakpoints`.
    pub fn simulate(&self, stimulus: &Stimulus, breakpoints: &[f64], dt: f64, steps: usize) -> Vec<Vec<f64>> {
        assert_eq!(stimulus.value(0.0), 0.0);
        let nz = self.state_dim();
        let gen = self.generator();
        let full = (&gen * dt).exp();
        let slope = |t0: f64, t1: f64| (stimulus.value(t1) - stimulus.value(t0)) / (t1 - t0);

        let mut w = DVector::<f64>::zeros(nz + 2);
        let mut out = vec![Vec::with_capacity(steps + 1); self.names.len()];
        self.record(&w, stimulus.value(0.0), &mut out);
        for k in 0..steps {
            let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
            let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t0 + 1e-9 * dt && b < t1 - 1e-9 * dt).collect();
            cuts.insert(0, t0);
            cuts.push(t1);
            if cuts.len() == 2 {
                w[nz] = stimulus.value(t0);
                w[nz + 1] = slope(t0, t1);
                w = &full * &w;
            } else {
                for seg in cuts.windows(2) {
                    w[nz] = stimulus.value(seg[0]);
                    w[nz + 1] = slope(seg[0], seg[1]);
                    w = (&gen * (seg[1] - seg[0])).exp() * &w;
                }
            }
            self.record(&w, stimulus.value(t1), &mut out);
        }
        out
    }

    fn record(&self, w: &DVector<f64>, s: f64, out: &mut [Vec<f64>]) {
        let nz = self.state_dim();
        let z = w.rows(0, nz);
        let va = &self.out_z * z + &self.out_s * s;
        for (pos, &node) in self.dynamic.iter().enumerate() {
            out[node].push(z[pos]);
        }
        for (pos, &node) in self.algebraic.iter().enumerate() {
            out[node].push(va[pos]);
        }
    }

    /// Reduced index of a network node name, `None` when grounded.
    pub fn index_of(&self, net: &CoupledNetwork, name: &str) -> Option<usize> {
        net.find_node(name).and_then(|id| self.class[id.0])
    }
}
