//! Seeded random Manhattan interconnect trees.
//!
//! Topology: start from one straight segment, then repeatedly either split
//! an existing branch at an interior integer point and hang a perpendicular
//! segment off the new junction, or extend a blocked terminal with a new
//! segment. Candidates whose footprint leaves the canvas, comes within
//! `clearance` um of an unrelated wire, or overlaps a neighbour outside the
//! shared junction square are rejected. All geometry is integer um.
//!
//! Currents: every blocked terminal injects a random current, the last one
//! balancing the rest, and each branch carries the net injection of the
//! subtree on one side of it. KCL therefore holds by construction.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BranchSpec, InterconnectTree, Node, NodeId, NodeKind, Rect};
use crate::seed::{derive_seed, rng, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    /// Run seed; every design seed derives from it.
    #[serde(with = "crate::seed::serde_seed")]
    pub rng_seed: u64,
    pub n_designs: usize,
    /// Inclusive.
    pub branch_count_range: [u32; 2],
    /// Inclusive, um (= pixels).
    pub width_range: [u32; 2],
    /// Inclusive, um. Applies to newly placed segments; splitting can leave
    /// shorter pieces down to `min_piece`.
    pub segment_length_range: [u32; 2],
    pub min_piece: u32,
    /// A/m^2, inclusive.
    pub j_magnitude_range: [f64; 2],
    /// um
    pub canvas: u32,
    /// Minimum gap between wires that do not share a node, um.
    pub clearance: u32,
    /// Placement attempts per branch before the tree is restarted.
    pub attempts_per_branch: usize,
    pub max_restarts: usize,
    /// Injection redraws before falling back to scaling currents down.
    pub current_retries: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rng_seed: 0,
            n_designs: 100,
            branch_count_range: [5, 79],
            width_range: [1, 4],
            segment_length_range: [8, 120],
            min_piece: 4,
            j_magnitude_range: [1e7, 1e9],
            canvas: 256,
            clearance: 1,
            attempts_per_branch: 200,
            max_restarts: 16,
            current_retries: 32,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("gen: {m}")));
        let [bmin, bmax] = self.branch_count_range;
        let [wmin, wmax] = self.width_range;
        let [lmin, lmax] = self.segment_length_range;
        let [jmin, jmax] = self.j_magnitude_range;
        if bmin < 1 || bmin > bmax {
            return bad("branch_count_range must be a nonempty range starting at >= 1");
        }
        if wmin < 1 || wmin > wmax {
            return bad("width_range must be a nonempty range starting at >= 1");
        }
        if lmin < 1 || lmin > lmax {
            return bad("segment_length_range must be a nonempty range starting at >= 1");
        }
        if self.min_piece < 1 {
            return bad("min_piece must be >= 1");
        }
        if !(jmin.is_finite() && jmax.is_finite() && 0.0 <= jmin && jmin <= jmax && jmax > 0.0) {
            return bad("j_magnitude_range must be a nonempty range of non-negative values");
        }
        if self.canvas < lmin + wmax + 2 * self.clearance {
            return bad("canvas too small for the segment and width ranges");
        }
        if self.attempts_per_branch == 0 {
            return bad("attempts_per_branch must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    Left,
    Right,
    Down,
    Up,
}

impl Dir {
    const ALL: [Dir; 4] = [Dir::Left, Dir::Right, Dir::Down, Dir::Up];

    fn step(self) -> (i64, i64) {
        match self {
            Dir::Left => (-1, 0),
            Dir::Right => (1, 0),
            Dir::Down => (0, -1),
            Dir::Up => (0, 1),
        }
    }

    fn horizontal(self) -> bool {
        matches!(self, Dir::Left | Dir::Right)
    }
}

#[derive(Debug, Clone, Copy)]
struct Wire {
    a: usize,
    b: usize,
    width: i64,
}

/// Growing tree with integer geometry.
struct Layout {
    canvas: i64,
    clearance: i64,
    nodes: Vec<(i64, i64)>,
    wires: Vec<Wire>,
}

impl Layout {
    fn degree(&self, n: usize) -> usize {
        self.wires.iter().filter(|w| w.a == n || w.b == n).count()
    }

    fn rect(&self, w: &Wire) -> Rect {
        let (p, q) = (self.nodes[w.a], self.nodes[w.b]);
        let off = (w.width - 1) / 2;
        if p.1 == q.1 {
            let (x0, x1) = (p.0.min(q.0), p.0.max(q.0));
            Rect { x0: x0 as f64, x1: x1 as f64, y0: (p.1 - off) as f64, y1: (p.1 - off + w.width) as f64 }
        } else {
            let (y0, y1) = (p.1.min(q.1), p.1.max(q.1));
            Rect { x0: (p.0 - off) as f64, x1: (p.0 - off + w.width) as f64, y0: y0 as f64, y1: y1 as f64 }
        }
    }

    fn junction_square(&self, n: usize, extra_width: i64) -> Rect {
        let w = self
            .wires
            .iter()
            .filter(|w| w.a == n || w.b == n)
            .map(|w| w.width)
            .fold(extra_width.max(1), i64::max);
        let off = (w - 1) / 2;
        let (x, y) = self.nodes[n];
        Rect { x0: (x - off) as f64, x1: (x - off + w) as f64, y0: (y - off) as f64, y1: (y - off + w) as f64 }
    }

    /// Whether a new wire from existing node `anchor` to a new point fits.
    fn fits(&self, anchor: usize, to: (i64, i64), width: i64) -> bool {
        let c = self.canvas;
        if to.0 < 0 || to.1 < 0 || to.0 > c || to.1 > c {
            return false;
        }
        let probe = Layout { canvas: c, clearance: self.clearance, nodes: vec![self.nodes[anchor], to], wires: vec![] };
        let rect = probe.rect(&Wire { a: 0, b: 1, width });
        let canvas = Rect { x0: 0.0, x1: c as f64, y0: 0.0, y1: c as f64 };
        if !canvas.contains_rect(&rect) {
            return false;
        }
        let square = self.junction_square(anchor, width);
        let guarded = rect.expand(self.clearance as f64);
        // Wires at the anchor run perpendicular to the new one or end there,
        // so only the junction square may be shared with them.
        self.wires.iter().all(|w| {
            let other = self.rect(w);
            if w.a == anchor || w.b == anchor {
                rect.intersection(&other).is_none_or(|i| square.contains_rect(&i))
            } else {
                guarded.intersection(&other).is_none()
            }
        })
    }
}

fn pick_dir(rng: &mut ChaCha8Rng, horizontal: bool) -> Dir {
    let choices: Vec<Dir> = Dir::ALL.into_iter().filter(|d| d.horizontal() == horizontal).collect();
    choices[rng.random_range(0..choices.len())]
}

fn grow(seed: u64, cfg: &GenConfig) -> Option<Layout> {
    let mut rng = rng(seed);
    let c = cfg.canvas as i64;
    let target = rng.random_range(cfg.branch_count_range[0]..=cfg.branch_count_range[1]) as usize;
    let len = |rng: &mut ChaCha8Rng| rng.random_range(cfg.segment_length_range[0]..=cfg.segment_length_range[1]) as i64;
    let wid = |rng: &mut ChaCha8Rng| rng.random_range(cfg.width_range[0]..=cfg.width_range[1]) as i64;
    let min_piece = cfg.min_piece as i64;

    let mut layout = Layout { canvas: c, clearance: cfg.clearance as i64, nodes: vec![], wires: vec![] };
    // root segment
    let mut placed = false;
    for _ in 0..cfg.attempts_per_branch {
        let horizontal = rng.random_bool(0.5);
        let (l, w) = (len(&mut rng), wid(&mut rng));
        let margin = w + cfg.clearance as i64;
        let (span_x, span_y) = if horizontal { (c - l, c - margin) } else { (c - margin, c - l) };
        if span_x < margin || span_y < margin {
            continue;
        }
        let x = rng.random_range(margin..=span_x);
        let y = rng.random_range(margin..=span_y);
        let end = if horizontal { (x + l, y) } else { (x, y + l) };
        layout.nodes = vec![(x, y), end];
        layout.wires = vec![Wire { a: 0, b: 1, width: w }];
        placed = true;
        break;
    }
    if !placed {
        return None;
    }

    let mut failures = 0;
    while layout.wires.len() < target {
        if failures >= cfg.attempts_per_branch {
            return None;
        }
        let remaining = target - layout.wires.len();
        let split = remaining >= 2 && rng.random_bool(0.6);
        let (l, w) = (len(&mut rng), wid(&mut rng));
        if split {
            let wi = rng.random_range(0..layout.wires.len());
            let wire = layout.wires[wi];
            let (p, q) = (layout.nodes[wire.a], layout.nodes[wire.b]);
            let span = (p.0 - q.0).abs() + (p.1 - q.1).abs();
            if span < 2 * min_piece {
                failures += 1;
                continue;
            }
            let along = rng.random_range(min_piece..=span - min_piece);
            let horizontal = p.1 == q.1;
            let (sx, sy) = if horizontal { ((q.0 - p.0).signum(), 0) } else { (0, (q.1 - p.1).signum()) };
            let at = (p.0 + sx * along, p.1 + sy * along);
            let dir = pick_dir(&mut rng, !horizontal);
            let (dx, dy) = dir.step();
            let to = (at.0 + dx * l, at.1 + dy * l);

            // tentatively split, then test the new wire from the split node
            let mut trial =
                Layout { canvas: c, clearance: layout.clearance, nodes: layout.nodes.clone(), wires: layout.wires.clone() };
            let mid = trial.nodes.len();
            trial.nodes.push(at);
            trial.wires[wi] = Wire { a: wire.a, b: mid, width: wire.width };
            trial.wires.push(Wire { a: mid, b: wire.b, width: wire.width });
            if trial.fits(mid, to, w) {
                let far = trial.nodes.len();
                trial.nodes.push(to);
                trial.wires.push(Wire { a: mid, b: far, width: w });
                layout = trial;
                failures = 0;
            } else {
                failures += 1;
            }
        } else {
            let terminals: Vec<usize> = (0..layout.nodes.len()).filter(|&n| layout.degree(n) == 1).collect();
            let anchor = terminals[rng.random_range(0..terminals.len())];
            let wire = layout.wires.iter().find(|w| w.a == anchor || w.b == anchor).copied().unwrap();
            let other = if wire.a == anchor { wire.b } else { wire.a };
            let back = (
                (layout.nodes[other].0 - layout.nodes[anchor].0).signum(),
                (layout.nodes[other].1 - layout.nodes[anchor].1).signum(),
            );
            let dirs: Vec<Dir> = Dir::ALL.into_iter().filter(|d| d.step() != back).collect();
            let dir = dirs[rng.random_range(0..dirs.len())];
            let (dx, dy) = dir.step();
            let at = layout.nodes[anchor];
            let to = (at.0 + dx * l, at.1 + dy * l);
            if layout.fits(anchor, to, w) {
                let far = layout.nodes.len();
                layout.nodes.push(to);
                layout.wires.push(Wire { a: anchor, b: far, width: w });
                failures = 0;
            } else {
                failures += 1;
            }
        }
    }
    Some(layout)
}

/// Random tree geometry with all currents zero.
pub fn generate_topology(seed: u64, cfg: &GenConfig) -> Result<InterconnectTree> {
    cfg.validate()?;
    let mut attempts = 0;
    for restart in 0..=cfg.max_restarts {
        let s = if restart == 0 { seed } else { derive_seed(seed ^ stream::RESTART, restart as u64) };
        attempts += 1;
        if let Some(layout) = grow(s, cfg) {
            let nodes = layout
                .nodes
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Node {
                    id: i as NodeId,
                    x: x as f64,
                    y: y as f64,
                    kind: if layout.degree(i) == 1 { NodeKind::Terminal } else { NodeKind::Junction },
                })
                .collect();
            let specs = layout
                .wires
                .iter()
                .enumerate()
                .map(|(i, w)| BranchSpec {
                    id: i as u32,
                    from: w.a as NodeId,
                    to: w.b as NodeId,
                    width: w.width as f64,
                    current_density: 0.0,
                })
                .collect();
            return Ok(InterconnectTree::from_specs(0, nodes, specs));
        }
    }
    Err(Error::Placement { seed, attempts })
}

/// Routes terminal injections through the tree.
///
/// `injections` maps terminal node ids to the current entering the tree
/// there; they must sum to zero for the result to satisfy KCL. Currents are
/// in amperes and `t_metal` in um, so branch `j = I / (w t_metal)` in
/// A/m^2. Positive `j` flows from the low-coordinate end to the high end.
pub fn currents_from_injections(tree: &InterconnectTree, injections: &BTreeMap<NodeId, f64>, t_metal: f64) -> InterconnectTree {
    let area_factor = t_metal * 1e-12; // um^2 -> m^2, per um of width
    route(tree, injections, area_factor)
}

fn route(tree: &InterconnectTree, injections: &BTreeMap<NodeId, f64>, area_per_width: f64) -> InterconnectTree {
    let incidence = tree.incidence();
    let root = tree.nodes[0].id;
    // DFS order with parent branch for every node
    let mut order = vec![root];
    let mut parent_branch: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut visited: std::collections::BTreeSet<NodeId> = [root].into();
    let mut i = 0;
    while i < order.len() {
        let n = order[i];
        for &bi in &incidence[&n] {
            let b = &tree.branches[bi];
            let other = if b.from == n { b.to } else { b.from };
            if visited.insert(other) {
                parent_branch.insert(other, bi);
                order.push(other);
            }
        }
        i += 1;
    }
    let mut subtree: BTreeMap<NodeId, f64> = order.iter().map(|n| (*n, injections.get(n).copied().unwrap_or(0.0))).collect();
    let mut out = tree.clone();
    for &n in order.iter().rev() {
        let Some(&bi) = parent_branch.get(&n) else { continue };
        let b = &tree.branches[bi];
        let parent = if b.from == n { b.to } else { b.from };
        let net = subtree[&n];
        *subtree.get_mut(&parent).unwrap() += net;
        // net current leaves the subtree of `n` through this branch
        let (low, _) = tree.ends(b);
        let low_to_high = if low == n { net } else { -net };
        out.branches[bi].current_density = low_to_high / (b.width * area_per_width);
    }
    out
}

/// Draws random terminal injections and routes them.
///
/// Each terminal injects a sheet current `w * j` with `|j|` uniform in
/// `j_magnitude_range` and a random sign; the last terminal balances the
/// rest. Draws that push any branch past the upper bound are redrawn up to
/// `current_retries` times, after which the last draw is scaled down to fit.
pub fn assign_currents(tree: &InterconnectTree, seed: u64, cfg: &GenConfig) -> InterconnectTree {
    let [jmin, jmax] = cfg.j_magnitude_range;
    let mut rng = rng(seed);
    let incidence = tree.incidence();
    let terminals: Vec<(NodeId, f64)> = tree
        .nodes
        .iter()
        .filter(|n| incidence[&n.id].len() == 1)
        .map(|n| (n.id, tree.branches[incidence[&n.id][0]].width))
        .collect();
    let mut last = tree.clone();
    for _ in 0..=cfg.current_retries {
        let mut injections = BTreeMap::new();
        let mut total = 0.0;
        for (i, &(node, width)) in terminals.iter().enumerate() {
            let sheet = if i + 1 == terminals.len() {
                -total
            } else {
                let magnitude = rng.random_range(jmin..=jmax);
                let signed = if rng.random_bool(0.5) { magnitude } else { -magnitude };
                width * signed
            };
            total += sheet;
            injections.insert(node, sheet);
        }
        last = route(tree, &injections, 1.0);
        if last.branches.iter().all(|b| b.current_density.abs() <= jmax) {
            return last;
        }
    }
    let peak = last.branches.iter().map(|b| b.current_density.abs()).fold(0.0, f64::max);
    let scale = jmax / peak;
    for b in &mut last.branches {
        b.current_density = (b.current_density * scale).clamp(-jmax, jmax);
    }
    last
}

/// A complete random design: topology plus KCL-consistent currents.
pub fn generate_tree(seed: u64, cfg: &GenConfig) -> Result<InterconnectTree> {
    let topology = generate_topology(seed, cfg)?;
    Ok(assign_currents(&topology, derive_seed(seed, stream::CURRENT), cfg))
}

/// Seed of design `index` in a run seeded with `run_seed`.
pub fn design_seed(run_seed: u64, index: u64) -> u64 {
    derive_seed(run_seed ^ stream::DESIGN, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_tree, write_tree, PhysicalParams};

    #[test]
    fn same_seed_same_tree() {
        let cfg = GenConfig::default();
        let a = write_tree(&generate_tree(11, &cfg).unwrap());
        let b = write_tree(&generate_tree(11, &cfg).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, write_tree(&generate_tree(12, &cfg).unwrap()));
    }

    #[test]
    fn fixed_branch_count_is_respected() {
        let cfg = GenConfig { branch_count_range: [5, 5], ..Default::default() };
        for seed in 0..20 {
            assert_eq!(generate_tree(seed, &cfg).unwrap().branches.len(), 5);
        }
    }

    #[test]
    fn single_segment_injection() {
        let cfg = GenConfig { branch_count_range: [1, 1], ..Default::default() };
        let topo = generate_topology(3, &cfg).unwrap();
        let (a, b) = (topo.nodes[0].id, topo.nodes[1].id);
        let w = topo.branches[0].width;
        let amps = 2e-5;
        let tree = currents_from_injections(&topo, &[(a, amps), (b, -amps)].into(), 0.2);
        let j = tree.branches[0].current_density;
        assert!((j.abs() - amps / (w * 0.2e-12)).abs() < 1e-6 * j.abs());
        // current enters at `a`; it flows toward +x iff `a` is the low end
        let (low, _) = tree.ends(&tree.branches[0]);
        assert_eq!(j > 0.0, low == a);
    }

    #[test]
    fn zero_injections_give_zero_currents() {
        let topo = generate_topology(5, &GenConfig::default()).unwrap();
        let tree = currents_from_injections(&topo, &BTreeMap::new(), 0.2);
        assert!(tree.branches.iter().all(|b| b.current_density == 0.0));
    }

    #[test]
    fn generated_trees_are_valid() {
        let cfg = GenConfig::default();
        for seed in 0..30 {
            let tree = generate_tree(seed, &cfg).unwrap();
            let v = validate_tree(&tree, &PhysicalParams::default());
            assert!(v.is_empty(), "seed {seed}: {v:?}");
            let n = tree.branches.len() as u32;
            assert!((5..=79).contains(&n));
            assert!(tree.nodes.iter().all(|n| n.x.fract() == 0.0 && n.y.fract() == 0.0));
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = GenConfig { branch_count_range: [6, 5], ..Default::default() };
        assert!(matches!(generate_tree(0, &cfg), Err(Error::Config(_))));
        let cfg = GenConfig { segment_length_range: [300, 400], ..Default::default() };
        assert!(matches!(generate_tree(0, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn impossible_packing_reports_seed() {
        let cfg = GenConfig {
            branch_count_range: [400, 400],
            attempts_per_branch: 20,
            max_restarts: 1,
            ..Default::default()
        };
        let err = generate_tree(77, &cfg).unwrap_err();
        assert!(matches!(err, Error::Placement { seed: 77, attempts: 2 }), "{err}");
    }
}
