//! Lateral boundary meshes for the space-time strip `(0,L) x (0,T)`.
//!
//! A mesh is a pair of partitions of the time interval `(0,T)`, one per
//! lateral side. Meshes are stored as node sequences; elements are the
//! implied intervals. All operations are pure and return new meshes.

use crate::{Error, Result, Side};
use std::fmt::Write as _;

/// Sorted partition of `(0, T)` on one lateral side.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalMesh {
    nodes: Vec<f64>,
}

impl TemporalMesh {
    /// Builds a mesh from a node sequence; requires `nodes[0] = 0`, strictly
    /// increasing values and at least one element.
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument(
                "temporal mesh needs at least two nodes".into(),
            ));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "temporal mesh must start at 0, got {}",
                nodes[0]
            )));
        }
        if !nodes.iter().all(|v| v.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "temporal mesh nodes must be finite and strictly increasing".into(),
            ));
        }
        Ok(TemporalMesh { nodes })
    }

    pub fn uniform(horizon: f64, elements: usize) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "time horizon must be positive, got {horizon}"
            )));
        }
        if elements == 0 {
            return Err(Error::InvalidArgument(
                "element count must be at least 1".into(),
            ));
        }
        let h = horizon / elements as f64;
        let mut nodes: Vec<f64> = (0..=elements).map(|i| i as f64 * h).collect();
        // Pin the endpoint exactly.
        *nodes.last_mut().unwrap() = horizon;
        TemporalMesh::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Element `i` as the interval `(t_i, t_{i+1})`.
    pub fn element(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    pub fn element_len(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the element containing `t` under the right-continuous
    /// convention (`t` exactly on an interior node belongs to the element to
    /// its right); `t = T` maps to the last element.
    pub fn element_containing(&self, t: f64) -> usize {
        let n = self.n_elements();
        match self.nodes.partition_point(|&x| x <= t) {
            0 => 0,
            p if p > n => n - 1,
            p => p - 1,
        }
    }
}

/// The pair of temporal meshes on the two lateral sides, plus the strip
/// geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct LateralMesh {
    side0: TemporalMesh,
    side_l: TemporalMesh,
    length: f64,
}

impl LateralMesh {
    pub fn new(side0: TemporalMesh, side_l: TemporalMesh, length: f64) -> Result<Self> {
        if !length.is_finite() || length <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "spatial length must be positive, got {length}"
            )));
        }
        if side0.horizon() != side_l.horizon() {
            return Err(Error::InvalidArgument(format!(
                "side horizons differ: {} vs {}",
                side0.horizon(),
                side_l.horizon()
            )));
        }
        Ok(LateralMesh {
            side0,
            side_l,
            length,
        })
    }

    /// Uniform mesh with `elements_per_side` equal elements on each side.
    pub fn uniform(length: f64, horizon: f64, elements_per_side: usize) -> Result<Self> {
        let side0 = TemporalMesh::uniform(horizon, elements_per_side)?;
        let side_l = side0.clone();
        LateralMesh::new(side0, side_l, length)
    }

    pub fn side(&self, s: Side) -> &TemporalMesh {
        match s {
            Side::X0 => &self.side0,
            Side::XL => &self.side_l,
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn horizon(&self) -> f64 {
        self.side0.horizon()
    }

    /// Number of time slices: the smallest `n` with `T <= n L`.
    pub fn slice_count(&self) -> usize {
        let t = self.horizon();
        let l = self.length;
        let mut n = (t / l).floor().max(1.0) as usize;
        while (n as f64) * l + self.node_tolerance() < t {
            n += 1;
        }
        n
    }

    /// Total element count over both sides; one degree of freedom per element
    /// for piecewise constants.
    pub fn n_dofs(&self) -> usize {
        self.side0.n_elements() + self.side_l.n_elements()
    }

    /// Global degree-of-freedom index of element `i` on side `s`
    /// (side `x=0` block first).
    pub fn global_index(&self, s: Side, i: usize) -> usize {
        match s {
            Side::X0 => i,
            Side::XL => self.side0.n_elements() + i,
        }
    }

    /// Tolerance under which two node values are identified.
    pub fn node_tolerance(&self) -> f64 {
        1e-10 * self.horizon().max(1.0)
    }

    /// Bisects each marked element; unmarked elements are unchanged.
    pub fn refine_marked(&self, marked: &[(Side, usize)]) -> Result<LateralMesh> {
        let mut mids: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut seen: [Vec<bool>; 2] = [
            vec![false; self.side0.n_elements()],
            vec![false; self.side_l.n_elements()],
        ];
        for &(s, i) in marked {
            let mesh = self.side(s);
            if i >= mesh.n_elements() {
                return Err(Error::InvalidArgument(format!(
                    "marked element {i} out of range on side {s} ({} elements)",
                    mesh.n_elements()
                )));
            }
            if !seen[s.index()][i] {
                seen[s.index()][i] = true;
                let (a, b) = mesh.element(i);
                mids[s.index()].push(0.5 * (a + b));
            }
        }
        let refine = |mesh: &TemporalMesh, mids: &[f64]| -> Result<TemporalMesh> {
            let mut nodes = mesh.nodes().to_vec();
            nodes.extend_from_slice(mids);
            nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            TemporalMesh::new(nodes)
        };
        LateralMesh::new(
            refine(&self.side0, &mids[0])?,
            refine(&self.side_l, &mids[1])?,
            self.length,
        )
    }

    /// Closes the mesh under the time-shift map between opposite sides:
    /// whenever `t` is a node on one side and `t + L <= T`, the value `t + L`
    /// becomes a node on the other side. Iterates to a fixed point; the input
    /// nodes are retained.
    ///
    /// Shifted nodes are propagated backward as well (`t - L >= 0` becomes a
    /// node on the other side), so the mesh restricted to a time slice equals
    /// the opposite side's next slice shifted by `L`. Forward closure alone
    /// leaves one-sided refinements without a counterpart, which loses the
    /// discrete stability identity the constraint exists to protect.
    pub fn enforce_shift_constraint(&self) -> LateralMesh {
        let tol = self.node_tolerance();
        let horizon = self.horizon();
        let mut sides = [self.side0.nodes().to_vec(), self.side_l.nodes().to_vec()];
        loop {
            let mut changed = false;
            for from in 0..2 {
                let to = 1 - from;
                let mut shifted: Vec<f64> = sides[from]
                    .iter()
                    .map(|&t| t + self.length)
                    .filter(|&t| t <= horizon - tol)
                    .collect();
                shifted.extend(
                    sides[from]
                        .iter()
                        .map(|&t| t - self.length)
                        .filter(|&t| t >= tol),
                );
                for t in shifted {
                    if insert_node(&mut sides[to], t, tol) {
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let [n0, nl] = sides;
        LateralMesh::new(
            TemporalMesh::new(n0).expect("shift closure preserves mesh validity"),
            TemporalMesh::new(nl).expect("shift closure preserves mesh validity"),
            self.length,
        )
        .expect("shift closure preserves geometry")
    }

    /// Plain-text serialization: one line per side with space-separated node
    /// values at full double precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in Side::BOTH {
            let mut first = true;
            for v in self.side(s).nodes() {
                if !first {
                    out.push(' ');
                }
                write!(out, "{v:.16e}").unwrap();
                first = false;
            }
            out.push('\n');
        }
        out
    }
}

/// Inserts `t` into the sorted node list unless a node within `tol` exists.
/// Returns whether an insertion happened.
fn insert_node(nodes: &mut Vec<f64>, t: f64, tol: f64) -> bool {
    let pos = nodes.partition_point(|&x| x < t);
    if pos < nodes.len() && (nodes[pos] - t).abs() <= tol {
        return false;
    }
    if pos > 0 && (nodes[pos - 1] - t).abs() <= tol {
        return false;
    }
    nodes.insert(pos, t);
    true
}

/// A coarse mesh together with the fine mesh obtained by splitting every
/// coarse element into `m` equal parts.
#[derive(Clone, Debug)]
pub struct NestedPair {
    coarse: LateralMesh,
    fine: LateralMesh,
    m: usize,
}

impl NestedPair {
    pub fn coarse(&self) -> &LateralMesh {
        &self.coarse
    }

    pub fn fine(&self) -> &LateralMesh {
        &self.fine
    }

    pub fn subdivision_factor(&self) -> usize {
        self.m
    }
}

/// Splits each coarse element on each side into `m` equal fine elements.
pub fn subdivide(coarse: &LateralMesh, m: usize) -> Result<NestedPair> {
    if m < 1 {
        return Err(Error::InvalidArgument(
            "subdivision factor must be at least 1".into(),
        ));
    }
    let split = |mesh: &TemporalMesh| -> TemporalMesh {
        if m == 1 {
            return mesh.clone();
        }
        let mut nodes = Vec::with_capacity(mesh.n_elements() * m + 1);
        nodes.push(0.0);
        for i in 0..mesh.n_elements() {
            let (a, b) = mesh.element(i);
            let h = (b - a) / m as f64;
            for k in 1..m {
                nodes.push(a + k as f64 * h);
            }
            nodes.push(b);
        }
        TemporalMesh::new(nodes).expect("subdivision preserves monotonicity")
    };
    let fine = LateralMesh::new(
        split(coarse.side(Side::X0)),
        split(coarse.side(Side::XL)),
        coarse.length(),
    )?;
    Ok(NestedPair {
        coarse: coarse.clone(),
        fine,
        m,
    })
}

/// For each fine element on each side, the index of the coarse element
/// containing it. Fails when the meshes are not nested (some coarse node has
/// no matching fine node within tolerance).
pub fn nesting_map(fine: &LateralMesh, coarse: &LateralMesh) -> Result<[Vec<usize>; 2]> {
    let tol = coarse.node_tolerance();
    let mut map: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for s in Side::BOTH {
        let cn = coarse.side(s).nodes();
        let fnodes = fine.side(s).nodes();
        for &c in cn {
            let pos = fnodes.partition_point(|&x| x < c - tol);
            if pos >= fnodes.len() || (fnodes[pos] - c).abs() > tol {
                return Err(Error::InvalidArgument(format!(
                    "meshes are not nested: coarse node {c} on side {s} is not a fine node"
                )));
            }
        }
        let fine_mesh = fine.side(s);
        map[s.index()] = (0..fine_mesh.n_elements())
            .map(|k| {
                let (a, b) = fine_mesh.element(k);
                coarse.side(s).element_containing(0.5 * (a + b))
            })
            .collect();
    }
    Ok(map)
}
