//! Cell aggregation: every cut cell is attached, through a path of facets that
//! meet the domain, to an aggregate owning exactly one interior (root) cell.
//!
//! Sweeps are synchronous: within one sweep a cut cell only sees cells that
//! were touched before the sweep started, so the result does not depend on the
//! visiting order. Among touched candidates the one whose aggregate root is
//! closest (cell-center distance) wins, with ties going to the smaller cell id.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::mesh::{BackgroundMesh, CellClass};

pub const NO_ROOT: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateMap {
    /// Root (interior) cell of each cell; `NO_ROOT` for exterior cells.
    pub root_of: Vec<usize>,
    /// Members of each aggregate, keyed by root id (empty for non-roots).
    pub members_of: Vec<Vec<usize>>,
    /// Number of sweeps that attached at least one cell.
    pub iterations_used: usize,
    /// Cut cells that could not be attached; reclassified as exterior.
    pub discarded_cells: Vec<usize>,
}

impl AggregateMap {
    pub fn root(&self, cell: usize) -> Option<usize> {
        let r = self.root_of[cell];
        (r != NO_ROOT).then_some(r)
    }

    /// Root cells in increasing id order.
    pub fn roots(&self) -> Vec<usize> {
        (0..self.root_of.len())
            .filter(|&c| self.root_of[c] == c)
            .collect()
    }

    pub fn aggregate_size(&self, root: usize) -> usize {
        self.members_of[root].len()
    }

    /// Every-cell-is-its-own-root map over the active cells, for the
    /// un-aggregated space.
    pub fn identity(mesh: &BackgroundMesh) -> Self {
        let n = mesh.num_cells();
        let mut root_of = vec![NO_ROOT; n];
        let mut members_of = vec![Vec::new(); n];
        for c in mesh.active_cells() {
            root_of[c] = c;
            members_of[c].push(c);
        }
        Self {
            root_of,
            members_of,
            iterations_used: 0,
            discarded_cells: Vec::new(),
        }
    }
}

/// Options of the aggregation scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregationOptions {
    /// Cut cells with volume fraction above this start as touched seeds
    /// (experimental). The default 1 disables seeding.
    pub eta_threshold: f64,
}

impl Default for AggregationOptions {
    fn default() -> Self {
        Self { eta_threshold: 1.0 }
    }
}

struct Sweep<'a> {
    mesh: &'a BackgroundMesh,
    root_of: Vec<usize>,
}

impl Sweep<'_> {
    fn dist(&self, a: usize, b: usize) -> f64 {
        math::dist(&self.mesh.cell_center(a), &self.mesh.cell_center(b))
    }

    /// Best touched facet neighbor of `cell` reachable through a facet that
    /// meets the domain.
    fn best_candidate(&self, cell: usize) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (nb, facet) in self.mesh.facet_neighbors(cell) {
            let r = self.root_of[nb];
            if r == NO_ROOT || !self.mesh.facet_cut_by_domain(&facet) {
                continue;
            }
            let d = self.dist(cell, r);
            let better = match best {
                None => true,
                Some((bd, bn)) => d < bd || (d == bd && nb < bn),
            };
            if better {
                best = Some((d, nb));
            }
        }
        best.map(|(_, nb)| nb)
    }

    /// Repeats synchronous sweeps over `pending` until nothing changes.
    /// Returns the number of productive sweeps.
    fn run(&mut self, pending: &mut Vec<usize>) -> usize {
        let mut sweeps = 0;
        loop {
            let assigned: Vec<(usize, usize)> = pending
                .iter()
                .filter_map(|&c| self.best_candidate(c).map(|nb| (c, self.root_of[nb])))
                .collect();
            if assigned.is_empty() {
                return sweeps;
            }
            sweeps += 1;
            for &(c, r) in &assigned {
                self.root_of[c] = r;
            }
            pending.retain(|c| self.root_of[*c] == NO_ROOT);
        }
    }
}

/// Builds the aggregates of a classified mesh. Unreachable cut cells are
/// discarded and marked exterior on `mesh`.
///
/// `eta` gives the volume fraction of a cell; it is only consulted when
/// `options.eta_threshold < 1`.
pub fn aggregate_cells(
    mesh: &mut BackgroundMesh,
    options: AggregationOptions,
    eta: impl Fn(usize) -> f64,
) -> AggregateMap {
    let n = mesh.num_cells();
    let mut sweep = Sweep {
        mesh,
        root_of: vec![NO_ROOT; n],
    };
    let mut pending = Vec::new();
    let mut seeds = Vec::new();
    for c in 0..n {
        match sweep.mesh.cell_class(c) {
            CellClass::Interior => sweep.root_of[c] = c,
            CellClass::Cut => {
                if options.eta_threshold < 1.0 && eta(c) > options.eta_threshold {
                    sweep.root_of[c] = c;
                    seeds.push(c);
                } else {
                    pending.push(c);
                }
            }
            CellClass::Exterior => {}
        }
    }
    let mut iterations = sweep.run(&mut pending);

    if !seeds.is_empty() {
        iterations += attach_seed_groups(&mut sweep, &seeds);
    }

    let mut discarded: Vec<usize> = (0..n)
        .filter(|&c| {
            sweep.mesh.cell_class(c) == CellClass::Cut
                && (sweep.root_of[c] == NO_ROOT
                    || sweep.mesh.cell_class(sweep.root_of[c]) != CellClass::Interior)
        })
        .collect();
    discarded.sort_unstable();
    for &c in &discarded {
        sweep.root_of[c] = NO_ROOT;
    }
    if !discarded.is_empty() {
        log::warn!(
            "aggregation discarded {} unreachable cut cells",
            discarded.len()
        );
    }
    let root_of = sweep.root_of;
    mesh.mark_exterior(&discarded);
    let mut members_of = vec![Vec::new(); n];
    for c in 0..n {
        if root_of[c] != NO_ROOT {
            members_of[root_of[c]].push(c);
        }
    }
    AggregateMap {
        root_of,
        members_of,
        iterations_used: iterations,
        discarded_cells: discarded,
    }
}

/// Re-roots the groups grown around seed cut cells onto interior roots: a
/// whole group moves to the interior-rooted aggregate reachable from one of
/// its members whose root is closest to the seed.
fn attach_seed_groups(sweep: &mut Sweep<'_>, seeds: &[usize]) -> usize {
    let mut rounds = 0;
    let mut open: Vec<usize> = seeds.to_vec();
    loop {
        let mut moves = Vec::new();
        for &seed in &open {
            let members: Vec<usize> = (0..sweep.root_of.len())
                .filter(|&c| sweep.root_of[c] == seed)
                .collect();
            let mut best: Option<(f64, usize, usize)> = None;
            for &m in &members {
                for (nb, facet) in sweep.mesh.facet_neighbors(m) {
                    let r = sweep.root_of[nb];
                    if r == NO_ROOT
                        || sweep.mesh.cell_class(r) != CellClass::Interior
                        || !sweep.mesh.facet_cut_by_domain(&facet)
                    {
                        continue;
                    }
                    let d = sweep.dist(seed, r);
                    let better = match best {
                        None => true,
                        Some((bd, bn, _)) => d < bd || (d == bd && nb < bn),
                    };
                    if better {
                        best = Some((d, nb, r));
                    }
                }
            }
            if let Some((_, _, r)) = best {
                moves.push((members, r));
            }
        }
        if moves.is_empty() {
            return rounds;
        }
        rounds += 1;
        for (members, r) in moves {
            let seed = sweep.root_of[members[0]];
            for m in members {
                sweep.root_of[m] = r;
            }
            open.retain(|&s| s != seed);
        }
    }
}

/// Largest bounding-box diagonal over all aggregates.
pub fn max_aggregate_size(map: &AggregateMap, mesh: &BackgroundMesh) -> f64 {
    map.roots()
        .iter()
        .map(|&r| mesh.cells_bbox_diagonal(&map.members_of[r]))
        .fold(0.0, f64::max)
}

/// Largest bounding-box side over all aggregates, in the units of the mesh.
pub fn max_aggregate_span(map: &AggregateMap, mesh: &BackgroundMesh) -> f64 {
    map.roots()
        .iter()
        .map(|&r| mesh.cells_span(&map.members_of[r]))
        .fold(0.0, f64::max)
}
