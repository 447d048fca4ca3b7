//! Finite-horizon estimate of the Carathéodory kernel of a domain sequence.
//!
//! "All but finitely many" is approximated by a failure budget: a lattice
//! node is eligible when it lies outside at most `window` of the domains
//! Ω_1..Ω_N. The estimate is the grid-connected component of the base point
//! among eligible nodes, which makes the marked set shrink (or stay equal)
//! as the horizon N grows, for any sequence.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::DefiningFunction;
use crate::linalg::CVec;

use super::ball_of_radius;

#[derive(Clone)]
pub struct DomainSequence {
    name: String,
    gen: Arc<dyn Fn(u32) -> DefiningFunction + Send + Sync>,
}

impl std::fmt::Debug for DomainSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DomainSequence({})", self.name)
    }
}

impl DomainSequence {
    pub fn from_fn(
        name: impl Into<String>,
        gen: impl Fn(u32) -> DefiningFunction + Send + Sync + 'static,
    ) -> Self {
        DomainSequence { name: name.into(), gen: Arc::new(gen) }
    }

    pub fn constant(f: DefiningFunction) -> Self {
        let name = format!("constant {}", f.tag());
        DomainSequence::from_fn(name, move |_| f.clone())
    }

    /// Ω_ν = B(0, 1 + 1/ν).
    pub fn expanding_balls(d: usize) -> Self {
        DomainSequence::from_fn("B(0, 1 + 1/ν)", move |nu| {
            ball_of_radius(d, 1.0 + 1.0 / nu as f64)
        })
    }

    /// Ω_ν = B(0, 1/ν).
    pub fn shrinking_balls(d: usize) -> Self {
        DomainSequence::from_fn("B(0, 1/ν)", move |nu| ball_of_radius(d, 1.0 / nu as f64))
    }

    pub fn domain(&self, nu: u32) -> DefiningFunction {
        (self.gen)(nu)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

#[derive(Clone, Debug)]
pub struct GridSpec {
    /// Lattice spacing in every real coordinate.
    pub spacing: f64,
    /// The lattice spans [-half_width, half_width] in every real coordinate.
    pub half_width: f64,
    /// Number of domains inspected.
    pub horizon: u32,
    /// Failure budget standing in for "finitely many".
    pub window: u32,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { spacing: 0.02, half_width: 1.0, horizon: 200, window: 5 }
    }
}

const NODE_CAP: usize = 1 << 21;

#[derive(Debug)]
pub struct KernelEstimate {
    pub base: CVec,
    /// Kernel degenerated to the single point {p}.
    pub singleton: bool,
    pub marked: Vec<CVec>,
    pub spacing: f64,
    pub horizon: u32,
    pub window: u32,
    pub notes: Vec<String>,
    index: HashSet<Vec<i32>>,
    dim: usize,
}

impl KernelEstimate {
    /// Whether the lattice node nearest to x is marked.
    pub fn contains(&self, x: &CVec) -> bool {
        if self.singleton {
            return x.len() == self.dim
                && crate::linalg::norm(&(x - &self.base)) < 0.5 * self.spacing;
        }
        x.len() == self.dim && self.index.contains(&node_of(x, self.spacing))
    }

    pub fn len(&self) -> usize {
        if self.singleton {
            1
        } else {
            self.marked.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn node_of(x: &CVec, h: f64) -> Vec<i32> {
    let mut idx = Vec::with_capacity(2 * x.len());
    for z in x.iter() {
        idx.push((z.re / h).round() as i32);
        idx.push((z.im / h).round() as i32);
    }
    idx
}

fn point_of(idx: &[i32], h: f64) -> CVec {
    CVec::from_fn(idx.len() / 2, |j, _| {
        Complex64::new(idx[2 * j] as f64 * h, idx[2 * j + 1] as f64 * h)
    })
}

pub fn caratheodory_kernel_estimate(
    domains: &DomainSequence,
    p: &CVec,
    grid: &GridSpec,
) -> Result<KernelEstimate> {
    if grid.horizon < grid.window {
        return Err(Error::Precondition(format!(
            "horizon {} below persistence window {}",
            grid.horizon, grid.window
        )));
    }
    if !(grid.spacing > 0.0) || !(grid.half_width > 0.0) {
        return Err(Error::Precondition("grid spacing/extent must be positive".into()));
    }
    let d = p.len();
    let per_axis = 2 * (grid.half_width / grid.spacing).floor() as i64 + 1;
    let total = (per_axis as f64).powi(2 * d as i32);
    if !(total <= NODE_CAP as f64) {
        return Err(Error::Precondition(format!(
            "grid would hold {total:.3e} nodes (cap {NODE_CAP}); coarsen the spacing"
        )));
    }

    // is the base point itself persistently interior?
    let mut base_failures = 0u32;
    for nu in 1..=grid.horizon {
        if domains.domain(nu).rho(p) >= 0.0 {
            base_failures += 1;
            if base_failures > grid.window {
                break;
            }
        }
    }
    let singleton_note =
        "base point not persistently interior; kernel is the single point {p}".to_string();
    if base_failures > grid.window {
        return Ok(KernelEstimate {
            base: p.clone(),
            singleton: true,
            marked: vec![p.clone()],
            spacing: grid.spacing,
            horizon: grid.horizon,
            window: grid.window,
            notes: vec![singleton_note],
            index: HashSet::new(),
            dim: d,
        });
    }

    // count membership failures per node, early-exhausting the budget
    let half = (per_axis / 2) as i32;
    let axes = 2 * d;
    let mut nodes: Vec<Vec<i32>> = Vec::new();
    let mut cursor = vec![-half; axes];
    loop {
        nodes.push(cursor.clone());
        let mut k = 0;
        loop {
            if k == axes {
                break;
            }
            cursor[k] += 1;
            if cursor[k] <= half {
                break;
            }
            cursor[k] = -half;
            k += 1;
        }
        if cursor.iter().all(|&v| v == -half) {
            break;
        }
    }
    let mut failures: Vec<u32> = vec![0; nodes.len()];
    for nu in 1..=grid.horizon {
        let f = domains.domain(nu);
        for (i, idx) in nodes.iter().enumerate() {
            if failures[i] > grid.window {
                continue;
            }
            if f.rho(&point_of(idx, grid.spacing)) >= 0.0 {
                failures[i] += 1;
            }
        }
    }
    let eligible: HashMap<Vec<i32>, usize> = nodes
        .iter()
        .enumerate()
        .filter(|(i, _)| failures[*i] <= grid.window)
        .map(|(i, idx)| (idx.clone(), i))
        .collect();

    // connected component of the node nearest p, axis adjacency
    let start = node_of(p, grid.spacing);
    if !eligible.contains_key(&start) {
        return Ok(KernelEstimate {
            base: p.clone(),
            singleton: true,
            marked: vec![p.clone()],
            spacing: grid.spacing,
            horizon: grid.horizon,
            window: grid.window,
            notes: vec![singleton_note],
            index: HashSet::new(),
            dim: d,
        });
    }
    let mut component: HashSet<Vec<i32>> = HashSet::new();
    let mut queue = VecDeque::new();
    component.insert(start.clone());
    queue.push_back(start);
    while let Some(cur) = queue.pop_front() {
        for k in 0..axes {
            for step in [-1i32, 1] {
                let mut nb = cur.clone();
                nb[k] += step;
                if nb[k].unsigned_abs() as i64 > half as i64 {
                    continue;
                }
                if eligible.contains_key(&nb) && component.insert(nb.clone()) {
                    queue.push_back(nb);
                }
            }
        }
    }

    let marked: Vec<CVec> = component.iter().map(|idx| point_of(idx, grid.spacing)).collect();
    let singleton = component.len() == 1;
    let mut notes = vec![format!(
        "node eligible when outside at most {} of the {} domains",
        grid.window, grid.horizon
    )];
    if singleton {
        notes.push("component collapsed to the base node".to_string());
    }
    Ok(KernelEstimate {
        base: p.clone(),
        singleton,
        marked,
        spacing: grid.spacing,
        horizon: grid.horizon,
        window: grid.window,
        notes,
        index: component,
        dim: d,
    })
}
