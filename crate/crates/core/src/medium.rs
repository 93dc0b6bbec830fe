//! FitzHugh-Nagumo excitable medium restricted to a conductive mask.
//!
//! ```text
//! du/dt = c1 u (u - a)(1 - u) - c2 u v + I + Du ∇²u
//! dv/dt = b (u - v)
//! ```
//!
//! Integration is explicit Euler with the five-point Laplacian. Only
//! conductive nodes carry state; a neighbour that is off-grid or
//! non-conductive is replaced by the node itself, which gives zero flux
//! across both the grid border and every mask boundary.
//!
//! Updated values smaller in magnitude than `rest_floor` are stored as 0.
//!
//! The step kernel reads iteration `t` and writes iteration `t + 1` into
//! separate buffers. Work is split into fixed tiles, so the result
//! does not depend on how many rayon workers execute them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ConductiveMask;
use crate::error::{config_err, Error, Result};

const NO_NODE: u32 = u32::MAX;
/// Nodes are numbered tile by tile; a tile is the unit of parallel work and
/// of rest skipping.
const TILE: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FhnParams {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub du: f64,
    pub dt: f64,
    pub dx: f64,
    /// Updated values with magnitude below this are stored as exactly 0.
    /// Keeps the resting medium out of subnormal arithmetic and lets
    /// untouched regions be skipped; 0 disables it.
    pub rest_floor: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        Self {
            a: 0.13,
            b: 0.013,
            c1: 0.26,
            c2: 0.095,
            du: 1.0,
            dt: 0.015,
            dx: 2.0,
            rest_floor: 1e-12,
        }
    }
}

impl FhnParams {
    /// Euler stability number of the diffusion term, `dt * Du * 4 / dx²`.
    pub fn diffusion_number(&self) -> f64 {
        self.dt * self.du * 4.0 / (self.dx * self.dx)
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("a", self.a),
            ("b", self.b),
            ("c1", self.c1),
            ("c2", self.c2),
            ("du", self.du),
            ("dt", self.dt),
            ("dx", self.dx),
        ];
        for (name, value) in named {
            if !(value.is_finite() && value > 0.0) {
                return Err(config_err(format!("FHN parameter {name} must be positive, got {value}")));
            }
        }
        if !(self.rest_floor.is_finite() && self.rest_floor >= 0.0) {
            return Err(config_err(format!(
                "rest_floor must be a non-negative number, got {}",
                self.rest_floor
            )));
        }
        let r = self.diffusion_number();
        if r >= 1.0 {
            return Err(config_err(format!(
                "explicit Euler is unstable: dt*Du*4/dx^2 = {r} (must be < 1)"
            )));
        }
        Ok(())
    }
}

/// Consecutive nodes of one tile row whose north and south neighbours are
/// also consecutive (or all missing). `north == start` marks a missing row.
#[derive(Clone, Copy, Debug)]
struct Segment {
    start: u32,
    len: u32,
    north: u32,
    south: u32,
}

/// Compact topology of the conductive nodes of a mask.
///
/// Nodes are numbered tile by tile, row-major inside each 64x64 tile. Each
/// node stores its four neighbours (west, east, north, south); a missing
/// neighbour points back at the node itself.
#[derive(Clone, Debug)]
pub struct Medium {
    width: usize,
    height: usize,
    index: Vec<u32>,
    coords: Vec<(u32, u32)>,
    neighbors: Vec<[u32; 4]>,
    /// Node range of tile `t` is `tile_offsets[t]..tile_offsets[t + 1]`.
    tile_offsets: Vec<usize>,
    segments: Vec<Segment>,
    segment_offsets: Vec<usize>,
    /// Tiles read by the stencils of each tile (CSR layout).
    dep_offsets: Vec<usize>,
    deps: Vec<u32>,
}

impl Medium {
    pub fn from_mask(mask: &ConductiveMask) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let (tiles_x, tiles_y) = (w.div_ceil(TILE), h.div_ceil(TILE));
        let mut index = vec![NO_NODE; w * h];
        let mut coords = Vec::with_capacity(mask.count());
        let mut tile_offsets = vec![0];
        let mut tile_of_node = Vec::with_capacity(mask.count());
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                for y in ty * TILE..((ty + 1) * TILE).min(h) {
                    for x in tx * TILE..((tx + 1) * TILE).min(w) {
                        if mask.get(x, y) {
                            index[y * w + x] = coords.len() as u32;
                            coords.push((x as u32, y as u32));
                            tile_of_node.push((ty * tiles_x + tx) as u32);
                        }
                    }
                }
                tile_offsets.push(coords.len());
            }
        }
        let lookup = |x: isize, y: isize, own: u32| -> u32 {
            if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                return own;
            }
            match index[y as usize * w + x as usize] {
                NO_NODE => own,
                n => n,
            }
        };
        let neighbors = coords
            .iter()
            .enumerate()
            .map(|(n, &(x, y))| {
                let (x, y, n) = (x as isize, y as isize, n as u32);
                [
                    lookup(x - 1, y, n),
                    lookup(x + 1, y, n),
                    lookup(x, y - 1, n),
                    lookup(x, y + 1, n),
                ]
            })
            .collect::<Vec<[u32; 4]>>();

        let mut segments = Vec::new();
        let mut segment_offsets = vec![0];
        let mut dep_offsets = vec![0];
        let mut deps = Vec::new();
        for t in 0..tile_offsets.len() - 1 {
            let (lo, hi) = (tile_offsets[t], tile_offsets[t + 1]);
            let mut n = lo;
            while n < hi {
                let [_, _, north, south] = neighbors[n];
                let mut len = 1;
                while n + len < hi {
                    let k = n + len;
                    let [west, _, kn, ks] = neighbors[k];
                    let follows = |first: u32, own: u32| {
                        if first == n as u32 {
                            own == k as u32
                        } else {
                            own as usize == first as usize + len
                        }
                    };
                    if west as usize != k - 1 || !follows(north, kn) || !follows(south, ks) {
                        break;
                    }
                    len += 1;
                }
                segments.push(Segment {
                    start: n as u32,
                    len: len as u32,
                    north,
                    south,
                });
                n += len;
            }
            segment_offsets.push(segments.len());

            let mut reads: Vec<u32> = neighbors[lo..hi]
                .iter()
                .flatten()
                .map(|&m| tile_of_node[m as usize])
                .collect();
            reads.sort_unstable();
            reads.dedup();
            deps.extend(reads);
            dep_offsets.push(deps.len());
        }
        Self {
            width: w,
            height: h,
            index,
            coords,
            neighbors,
            tile_offsets,
            segments,
            segment_offsets,
            dep_offsets,
            deps,
        }
    }

    fn tile_count(&self) -> usize {
        self.tile_offsets.len() - 1
    }

    fn tile_range(&self, tile: usize) -> std::ops::Range<usize> {
        self.tile_offsets[tile]..self.tile_offsets[tile + 1]
    }

    fn tile_segments(&self, tile: usize) -> &[Segment] {
        &self.segments[self.segment_offsets[tile]..self.segment_offsets[tile + 1]]
    }

    fn tile_deps(&self, tile: usize) -> &[u32] {
        &self.deps[self.dep_offsets[tile]..self.dep_offsets[tile + 1]]
    }

    fn dirty_tiles(&self, state: &FieldState) -> Vec<bool> {
        (0..self.tile_count())
            .map(|t| {
                let r = self.tile_range(t);
                state.u[r.clone()].iter().chain(&state.v[r]).any(|&x| x != 0.0)
            })
            .collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of conductive nodes.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn node_at(&self, x: usize, y: usize) -> Option<usize> {
        if x >= self.width || y >= self.height {
            return None;
        }
        match self.index[y * self.width + x] {
            NO_NODE => None,
            n => Some(n as usize),
        }
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        let (x, y) = self.coords[node];
        (x as usize, y as usize)
    }

    /// Conductive nodes whose distance to `center` satisfies `within(d²)`.
    pub fn nodes_near(
        &self,
        center: (f64, f64),
        radius: f64,
        within: impl Fn(f64) -> bool,
    ) -> Vec<usize> {
        let reach = radius.ceil() as isize;
        let (cx, cy) = (center.0.round() as isize, center.1.round() as isize);
        let mut nodes = Vec::new();
        for y in (cy - reach)..=(cy + reach) {
            for x in (cx - reach)..=(cx + reach) {
                if x < 0 || y < 0 {
                    continue;
                }
                let d2 = (x as f64 - center.0).powi(2) + (y as f64 - center.1).powi(2);
                if within(d2) {
                    if let Some(n) = self.node_at(x as usize, y as usize) {
                        nodes.push(n);
                    }
                }
            }
        }
        nodes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Completed iterations.
    pub t: u64,
}

impl FieldState {
    pub fn zeros(medium: &Medium) -> Self {
        Self {
            u: vec![0.0; medium.len()],
            v: vec![0.0; medium.len()],
            t: 0,
        }
    }

    /// Value of `u` at a grid node; zero where the mask is not conductive.
    pub fn u_at(&self, medium: &Medium, x: usize, y: usize) -> f64 {
        medium.node_at(x, y).map_or(0.0, |n| self.u[n])
    }
}

/// Constant current applied to a node set over `[start, end)` iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct StimulusEntry {
    pub nodes: Vec<usize>,
    pub current: f64,
    pub start: u64,
    pub end: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StimulusSchedule {
    pub entries: Vec<StimulusEntry>,
}

impl StimulusSchedule {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn validate(&self, medium: &Medium) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if e.start > e.end {
                return Err(config_err(format!(
                    "stimulus entry {i} starts at {} after it ends at {}",
                    e.start, e.end
                )));
            }
            if !e.current.is_finite() {
                return Err(config_err(format!("stimulus entry {i} has a non-finite current")));
            }
            if let Some(&n) = e.nodes.iter().find(|&&n| n >= medium.len()) {
                return Err(config_err(format!("stimulus entry {i} names node {n} outside the mask")));
            }
        }
        Ok(())
    }

    /// Whether the set of active entries changes at iteration `t`.
    fn changes_at(&self, t: u64) -> bool {
        self.entries.iter().any(|e| e.start == t || e.end == t)
    }

    /// Dense per-node current at iteration `t`; `None` when nothing is active.
    fn current_at(&self, t: u64, len: usize) -> Option<Vec<f64>> {
        let mut active = self.entries.iter().filter(|e| e.start <= t && t < e.end).peekable();
        active.peek()?;
        let mut current = vec![0.0; len];
        for e in active {
            for &n in &e.nodes {
                current[n] += e.current;
            }
        }
        Some(current)
    }
}

/// Five-point Laplacian with mirrored (zero-flux) neighbours.
pub fn masked_laplacian(field: &[f64], medium: &Medium, dx: f64) -> Vec<f64> {
    let inv_dx2 = 1.0 / (dx * dx);
    medium
        .neighbors
        .iter()
        .zip(field)
        .map(|(nb, &c)| stencil(field, nb, c) * inv_dx2)
        .collect()
}

#[inline(always)]
fn stencil(field: &[f64], nb: &[u32; 4], center: f64) -> f64 {
    field[nb[0] as usize] + field[nb[1] as usize] + field[nb[2] as usize] + field[nb[3] as usize]
        - 4.0 * center
}

#[inline(always)]
fn flush(x: f64, floor: f64) -> f64 {
    if x.abs() < floor {
        0.0
    } else {
        x
    }
}

/// Reusable integrator holding the double buffers and the current vector.
///
/// Tiles whose nodes and neighbours are all exactly at rest, with no
/// current applied, are left at zero instead of being recomputed. A node at
/// `u = v = 0` surrounded by zeros maps to exactly zero, so skipping is
/// bit-identical to computing.
pub struct Integrator<'a> {
    medium: &'a Medium,
    params: FhnParams,
    schedule: &'a StimulusSchedule,
    current: Option<Vec<f64>>,
    driven: Vec<bool>,
    current_valid_for: Option<u64>,
    next_u: Vec<f64>,
    next_v: Vec<f64>,
    /// Whether each tile of `next_u`/`next_v` may hold nonzero values.
    next_dirty: Vec<bool>,
}

/// Read-only inputs of one step.
struct Kernel<'k> {
    p: FhnParams,
    inv_dx2: f64,
    u: &'k [f64],
    v: &'k [f64],
    current: Option<&'k [f64]>,
    medium: &'k Medium,
}

impl Kernel<'_> {
    #[inline(always)]
    fn update(&self, un: f64, vn: f64, around: f64, stim: f64) -> (f64, f64) {
        let p = &self.p;
        let lap = (around - 4.0 * un) * self.inv_dx2;
        let du = p.c1 * un * (un - p.a) * (1.0 - un) - p.c2 * un * vn + stim + p.du * lap;
        (
            flush(un + p.dt * du, p.rest_floor),
            flush(vn + p.dt * p.b * (un - vn), p.rest_floor),
        )
    }

    /// Writes the next state of `tile` into `out_u`/`out_v`.
    /// Returns whether any written value is non-finite.
    fn tile(&self, tile: usize, out_u: &mut [f64], out_v: &mut [f64]) -> bool {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2, checked just above.
            return unsafe { self.tile_avx2(tile, out_u, out_v) };
        }
        self.tile_body(tile, out_u, out_v)
    }

    /// Same code compiled for wider vectors. Rust does not contract `a * b + c`
    /// into fused operations, so the results are bit-identical.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn tile_avx2(&self, tile: usize, out_u: &mut [f64], out_v: &mut [f64]) -> bool {
        self.tile_body(tile, out_u, out_v)
    }

    #[inline(always)]
    fn tile_body(&self, tile: usize, out_u: &mut [f64], out_v: &mut [f64]) -> bool {
        let range = self.medium.tile_range(tile);
        let base = range.start;
        // Pass 1: neighbour sums, stored in `out_u`.
        for seg in self.medium.tile_segments(tile) {
            let (s, len) = (seg.start as usize, seg.len as usize);
            for n in [s, s + len - 1] {
                let nb = &self.medium.neighbors[n];
                let u = self.u;
                out_u[n - base] = u[nb[0] as usize] + u[nb[1] as usize] + u[nb[2] as usize] + u[nb[3] as usize];
            }
            if len < 3 {
                continue;
            }
            // Interior nodes: west/east are the adjacent indices and north/south
            // are contiguous ranges.
            let m = len - 2;
            let (c, n, so) = (s + 1, seg.north as usize + 1, seg.south as usize + 1);
            let west = &self.u[c - 1..c - 1 + m];
            let east = &self.u[c + 1..c + 1 + m];
            let north = &self.u[n..n + m];
            let south = &self.u[so..so + m];
            let around = &mut out_u[c - base..c - base + m];
            for k in 0..m {
                around[k] = west[k] + east[k] + north[k] + south[k];
            }
        }
        // Pass 2: reaction and update over the contiguous node range.
        let (u, v) = (&self.u[range.clone()], &self.v[range.clone()]);
        let (out_u, out_v) = (&mut out_u[..u.len()], &mut out_v[..u.len()]);
        let mut exp_max = 0u32;
        match self.current {
            Some(cur) => {
                let stim = &cur[range];
                for k in 0..u.len() {
                    let (nu, nv) = self.update(u[k], v[k], out_u[k], stim[k]);
                    (out_u[k], out_v[k]) = (nu, nv);
                    exp_max |= nonfinite_bits(nu) | nonfinite_bits(nv);
                }
            }
            None => {
                for k in 0..u.len() {
                    let (nu, nv) = self.update(u[k], v[k], out_u[k], 0.0);
                    (out_u[k], out_v[k]) = (nu, nv);
                    exp_max |= nonfinite_bits(nu) | nonfinite_bits(nv);
                }
            }
        }
        exp_max != 0
    }
}

/// Nonzero iff `x` is infinite or NaN (all exponent bits set).
#[inline(always)]
fn nonfinite_bits(x: f64) -> u32 {
    const EXPONENT: u32 = 0x7ff0_0000;
    let high = (x.to_bits() >> 32) as u32;
    u32::from(high & EXPONENT == EXPONENT)
}


impl<'a> Integrator<'a> {
    pub fn new(medium: &'a Medium, params: FhnParams, schedule: &'a StimulusSchedule) -> Result<Self> {
        params.validate()?;
        schedule.validate(medium)?;
        let tiles = medium.tile_count();
        Ok(Self {
            medium,
            params,
            schedule,
            current: None,
            driven: vec![false; tiles],
            current_valid_for: None,
            next_u: vec![0.0; medium.len()],
            next_v: vec![0.0; medium.len()],
            next_dirty: vec![false; tiles],
        })
    }

    fn refresh_current(&mut self, t: u64) {
        let stale = match self.current_valid_for {
            None => true,
            Some(prev) => prev + 1 != t || self.schedule.changes_at(t),
        };
        if stale {
            let medium = self.medium;
            self.current = self.schedule.current_at(t, medium.len());
            self.driven = (0..medium.tile_count())
                .map(|t| {
                    self.current
                        .as_ref()
                        .is_some_and(|c| c[medium.tile_range(t)].iter().any(|&i| i != 0.0))
                })
                .collect();
        }
        self.current_valid_for = Some(t);
    }

    /// Advances `state` by one iteration in place.
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        assert_eq!(state.u.len(), self.medium.len(), "state does not match medium");
        let mut dirty = self.medium.dirty_tiles(state);
        self.step_tracked(state, &mut dirty)
    }

    /// Like `step`, with `dirty` describing which tiles of `state` may be
    /// nonzero; it is updated to describe the new state.
    fn step_tracked(&mut self, state: &mut FieldState, dirty: &mut Vec<bool>) -> Result<()> {
        self.refresh_current(state.t);
        let medium = self.medium;
        let kernel = Kernel {
            p: self.params,
            inv_dx2: 1.0 / (self.params.dx * self.params.dx),
            u: &state.u,
            v: &state.v,
            current: self.current.as_deref(),
            medium,
        };
        let driven = &self.driven[..];
        let dirty_now = &dirty[..];

        let mut parts = Vec::with_capacity(medium.tile_count());
        let (mut rest_u, mut rest_v) = (&mut self.next_u[..], &mut self.next_v[..]);
        for t in 0..medium.tile_count() {
            let len = medium.tile_range(t).len();
            let (head_u, tail_u) = std::mem::take(&mut rest_u).split_at_mut(len);
            let (head_v, tail_v) = std::mem::take(&mut rest_v).split_at_mut(len);
            parts.push((head_u, head_v));
            (rest_u, rest_v) = (tail_u, tail_v);
        }

        let outcomes: Vec<(bool, Option<usize>)> = parts
            .into_par_iter()
            .zip(self.next_dirty.par_iter())
            .enumerate()
            .map(|(tile, ((out_u, out_v), &stale))| {
                let live = driven[tile] || medium.tile_deps(tile).iter().any(|&d| dirty_now[d as usize]);
                if !live {
                    if stale {
                        out_u.fill(0.0);
                        out_v.fill(0.0);
                    }
                    return (false, None);
                }
                let nonfinite = kernel.tile(tile, out_u, out_v);
                let bad = nonfinite.then(|| {
                    let i = out_u
                        .iter()
                        .zip(out_v.iter())
                        .position(|(a, b)| !(a.is_finite() && b.is_finite()))
                        .expect("a non-finite value was seen");
                    medium.tile_offsets[tile] + i
                });
                // A tile that was already active is assumed to stay so; only
                // tiles leaving rest are scanned.
                let nonzero = dirty_now[tile] || out_u.iter().chain(out_v.iter()).any(|&x| x != 0.0);
                (nonzero, bad)
            })
            .collect();

        if let Some(n) = outcomes.iter().filter_map(|o| o.1).min() {
            let (x, y) = medium.coords(n);
            return Err(Error::BlowUp {
                x,
                y,
                iteration: state.t,
            });
        }
        for (slot, (nonzero, _)) in self.next_dirty.iter_mut().zip(&outcomes) {
            *slot = *nonzero;
        }
        std::mem::swap(&mut state.u, &mut self.next_u);
        std::mem::swap(&mut state.v, &mut self.next_v);
        std::mem::swap(dirty, &mut self.next_dirty);
        state.t += 1;
        Ok(())
    }
}

/// Single iteration as a pure function.
pub fn step(
    state: &FieldState,
    medium: &Medium,
    params: FhnParams,
    schedule: &StimulusSchedule,
) -> Result<FieldState> {
    let mut next = state.clone();
    Integrator::new(medium, params, schedule)?.step(&mut next)?;
    Ok(next)
}

/// Something that inspects the state every `cadence` iterations.
pub trait Observer {
    fn cadence(&self) -> u64;
    fn observe(&mut self, medium: &Medium, state: &FieldState) -> Result<()>;
}

/// Runs `duration` iterations from `initial`. After each iteration, every
/// observer whose cadence divides the iteration count is called, in order.
pub fn run(
    medium: &Medium,
    params: FhnParams,
    schedule: &StimulusSchedule,
    initial: FieldState,
    duration: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<FieldState> {
    if observers.iter().any(|o| o.cadence() == 0) {
        return Err(config_err("observer cadence must be >= 1"));
    }
    let mut integrator = Integrator::new(medium, params, schedule)?;
    let mut state = initial;
    assert_eq!(state.u.len(), medium.len(), "state does not match medium");
    let mut dirty = medium.dirty_tiles(&state);
    for _ in 0..duration {
        integrator.step_tracked(&mut state, &mut dirty)?;
        for obs in observers.iter_mut() {
            if state.t.is_multiple_of(obs.cadence()) {
                obs.observe(medium, &state)?;
            }
        }
    }
    Ok(state)
}
