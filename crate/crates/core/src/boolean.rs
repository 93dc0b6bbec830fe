//! Truth-table Boolean functions and their complexity measures.
//!
//! Inputs are integers whose bit `i` is variable `i`. Spectral measures use
//! the fast Walsh-Hadamard and Möbius transforms; the pointwise measures
//! (block sensitivity, certificate complexity, decision-tree depth) are
//! exhaustive and only computed for small arities.

use std::fmt::Write as _;

use crate::error::{config_err, Result};

pub const MAX_ARITY: usize = 16;
pub const MAX_ARITY_EXHAUSTIVE: usize = 8;
pub const MAX_ARITY_DECISION_TREE: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    k: usize,
    table: Vec<bool>,
}

impl BooleanFunction {
    pub fn new(k: usize, table: Vec<bool>) -> Result<Self> {
        if k > MAX_ARITY {
            return Err(config_err(format!("arity {k} exceeds the supported maximum {MAX_ARITY}")));
        }
        if table.len() != 1 << k {
            return Err(config_err(format!(
                "truth table of a {k}-input function needs {} entries, got {}",
                1usize << k,
                table.len()
            )));
        }
        Ok(Self { k, table })
    }

    pub fn from_fn(k: usize, f: impl Fn(usize) -> bool) -> Result<Self> {
        if k > MAX_ARITY {
            return Err(config_err(format!("arity {k} exceeds the supported maximum {MAX_ARITY}")));
        }
        Self::new(k, (0..1usize << k).map(f).collect())
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn eval(&self, x: usize) -> bool {
        self.table[x]
    }

    pub fn weight(&self) -> usize {
        self.table.iter().filter(|&&b| b).count()
    }

    /// Walsh spectrum `W(a) = Σ_x (-1)^(f(x) ⊕ a·x)`.
    pub fn walsh_spectrum(&self) -> Vec<i64> {
        let mut w: Vec<i64> = self.table.iter().map(|&b| if b { -1 } else { 1 }).collect();
        let mut h = 1;
        while h < w.len() {
            for block in w.chunks_mut(2 * h) {
                let (lo, hi) = block.split_at_mut(h);
                for (a, b) in lo.iter_mut().zip(hi) {
                    let (x, y) = (*a, *b);
                    *a = x + y;
                    *b = x - y;
                }
            }
            h *= 2;
        }
        w
    }

    /// Algebraic normal form coefficients, indexed by monomial bitmask.
    pub fn anf(&self) -> Vec<bool> {
        mobius(&self.table)
    }

    pub fn algebraic_degree(&self) -> usize {
        self.anf()
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c)
            .map(|(m, _)| m.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    pub fn nonlinearity(&self) -> usize {
        let max_abs = self.walsh_spectrum().iter().map(|w| w.unsigned_abs()).max().unwrap_or(0) as usize;
        (self.table.len() - max_abs) / 2
    }

    /// Fraction of inputs whose value flips when variable `i` flips.
    pub fn influence(&self, i: usize) -> f64 {
        let flips = (0..self.table.len())
            .filter(|&x| self.table[x] != self.table[x ^ (1 << i)])
            .count();
        flips as f64 / self.table.len() as f64
    }

    fn sensitive_count(&self, x: usize) -> usize {
        (0..self.k).filter(|&i| self.table[x] != self.table[x ^ (1 << i)]).count()
    }

    pub fn sensitivity(&self) -> usize {
        (0..self.table.len()).map(|x| self.sensitive_count(x)).max().unwrap_or(0)
    }

    fn block_sensitivity_at(&self, x: usize) -> usize {
        let n = self.table.len();
        let fx = self.table[x];
        let sensitive: Vec<bool> = (0..n).map(|b| b != 0 && self.table[x ^ b] != fx).collect();
        // A block is minimal when no proper sub-block is sensitive.
        let minimal: Vec<usize> = (1..n)
            .filter(|&b| sensitive[b])
            .filter(|&b| {
                let mut sub = (b - 1) & b;
                while sub != 0 {
                    if sensitive[sub] {
                        return false;
                    }
                    sub = (sub - 1) & b;
                }
                true
            })
            .collect();
        // best[avail] = most disjoint minimal blocks inside `avail`.
        let mut best = vec![0usize; n];
        for avail in 1..n {
            best[avail] = minimal
                .iter()
                .filter(|&&b| b & avail == b)
                .map(|&b| 1 + best[avail & !b])
                .max()
                .unwrap_or(0);
        }
        best[n - 1]
    }

    pub fn block_sensitivity(&self) -> Option<usize> {
        (self.k <= MAX_ARITY_EXHAUSTIVE)
            .then(|| (0..self.table.len()).map(|x| self.block_sensitivity_at(x)).max().unwrap_or(0))
    }

    fn certificate_at(&self, x: usize) -> usize {
        let n = self.table.len();
        let fx = self.table[x];
        let full = n - 1;
        let mut sizes: Vec<usize> = (0..n).collect();
        sizes.sort_by_key(|s| s.count_ones());
        for s in sizes {
            // Enumerate every completion of the free variables.
            let free = full & !s;
            let mut sub = free;
            let mut constant = true;
            loop {
                if self.table[(x & s) | sub] != fx {
                    constant = false;
                    break;
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & free;
            }
            if constant {
                return s.count_ones() as usize;
            }
        }
        self.k
    }

    pub fn certificate_complexity(&self) -> Option<usize> {
        (self.k <= MAX_ARITY_EXHAUSTIVE)
            .then(|| (0..self.table.len()).map(|x| self.certificate_at(x)).max().unwrap_or(0))
    }

    /// Depth of an optimal deterministic decision tree.
    pub fn decision_tree_depth(&self) -> Option<usize> {
        if self.k > MAX_ARITY_DECISION_TREE {
            return None;
        }
        let mut memo = vec![None; 3usize.pow(self.k as u32)];
        Some(self.dt_depth(0, 0, &mut memo))
    }

    fn dt_depth(&self, fixed: usize, values: usize, memo: &mut [Option<usize>]) -> usize {
        let key = (0..self.k).fold(0, |acc, i| {
            let digit = if fixed >> i & 1 == 0 { 0 } else { 1 + (values >> i & 1) };
            acc * 3 + digit
        });
        if let Some(d) = memo[key] {
            return d;
        }
        let free = (self.table.len() - 1) & !fixed;
        let first = self.table[values];
        let mut sub = free;
        let mut constant = true;
        loop {
            if self.table[values | sub] != first {
                constant = false;
                break;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        let depth = if constant {
            0
        } else {
            (0..self.k)
                .filter(|&i| free >> i & 1 == 1)
                .map(|i| {
                    let f = fixed | 1 << i;
                    1 + self.dt_depth(f, values, memo).max(self.dt_depth(f, values | 1 << i, memo))
                })
                .min()
                .expect("non-constant restriction has a free variable")
        };
        memo[key] = Some(depth);
        depth
    }

    pub fn metrics(&self) -> BoolMetrics {
        let influences: Vec<f64> = (0..self.k).map(|i| self.influence(i)).collect();
        BoolMetrics {
            k: self.k,
            weight: self.weight(),
            algebraic_degree: self.algebraic_degree(),
            nonlinearity: self.nonlinearity(),
            total_influence: influences.iter().sum(),
            influences,
            sensitivity: self.sensitivity(),
            block_sensitivity: self.block_sensitivity(),
            certificate_complexity: self.certificate_complexity(),
            decision_tree_depth: self.decision_tree_depth(),
        }
    }
}

/// Möbius transform over GF(2); its own inverse.
pub fn mobius(table: &[bool]) -> Vec<bool> {
    let mut c = table.to_vec();
    let mut h = 1;
    while h < c.len() {
        for block in c.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter().zip(hi) {
                *b ^= *a;
            }
        }
        h *= 2;
    }
    c
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoolMetrics {
    pub k: usize,
    pub weight: usize,
    pub algebraic_degree: usize,
    pub nonlinearity: usize,
    pub influences: Vec<f64>,
    pub total_influence: f64,
    pub sensitivity: usize,
    /// `None` above [`MAX_ARITY_EXHAUSTIVE`] inputs.
    pub block_sensitivity: Option<usize>,
    /// `None` above [`MAX_ARITY_EXHAUSTIVE`] inputs.
    pub certificate_complexity: Option<usize>,
    /// `None` above [`MAX_ARITY_DECISION_TREE`] inputs.
    pub decision_tree_depth: Option<usize>,
}

pub fn bool_metrics(f: &BooleanFunction) -> BoolMetrics {
    f.metrics()
}

impl BoolMetrics {
    /// `key=value` lines; uncomputed measures read `not-computed`.
    pub fn report(&self, prefix: &str) -> String {
        let opt = |v: Option<usize>| v.map_or_else(|| "not-computed".to_string(), |v| v.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}k={}", self.k);
        let _ = writeln!(out, "{prefix}weight={}", self.weight);
        let _ = writeln!(out, "{prefix}algebraic_degree={}", self.algebraic_degree);
        let _ = writeln!(out, "{prefix}nonlinearity={}", self.nonlinearity);
        for (i, inf) in self.influences.iter().enumerate() {
            let _ = writeln!(out, "{prefix}influence_{i}={inf}");
        }
        let _ = writeln!(out, "{prefix}total_influence={}", self.total_influence);
        let _ = writeln!(out, "{prefix}sensitivity={}", self.sensitivity);
        let _ = writeln!(out, "{prefix}block_sensitivity={}", opt(self.block_sensitivity));
        let _ = writeln!(out, "{prefix}certificate_complexity={}", opt(self.certificate_complexity));
        let _ = writeln!(out, "{prefix}decision_tree_depth={}", opt(self.decision_tree_depth));
        out
    }
}
