//! Text container for decompositions.
//!
//! ```text
//! mra-decomposition 1
//! level 5
//! nodes 2,2
//! degree 0,0
//! index box (3,3)
//! 1,0 0,0 0,0 -2.5e-1
//! ```
//!
//! Header lines come first; every following line is one coefficient
//! `κ ρ i value`, multi-indices comma separated. Values use the shortest
//! representation that parses back to the same `f64`, so a write/read cycle
//! is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::transform::{Decomposition, DetailCoeffs, IndexSet};
use crate::basis::detail_dim;
use crate::dyadic::MultiIndex;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::DegreeVector;

const MAGIC: &str = "mra-decomposition 1";

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Serializes every coefficient of every block.
pub fn write_records(dec: &Decomposition) -> String {
    let grid = &dec.grid;
    let nodes: Vec<usize> = (0..grid.dim()).map(|j| grid.nodes_per_cell(j)).collect();
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "level {}", grid.level()).unwrap();
    writeln!(out, "nodes {}", join(&nodes)).unwrap();
    writeln!(out, "degree {}", join(dec.degree.as_slice())).unwrap();
    match &dec.index_set {
        IndexSet::Box(k) => writeln!(out, "index box {}", join(k.as_slice())).unwrap(),
        IndexSet::Cross { beta, radius } => {
            let b: Vec<String> = beta.iter().map(|x| format!("{x:e}")).collect();
            writeln!(out, "index cross {} {radius}", b.join(",")).unwrap()
        }
    }
    for (k, block) in &dec.blocks {
        let ks = join(k.as_slice());
        for (rho, i, v) in block.records() {
            writeln!(out, "{ks} {} {} {v:e}", join(&rho), join(&i)).unwrap();
        }
    }
    out
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad entry {t:?}")))
        })
        .collect()
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (n, line) = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("missing {key} line")))?;
    line.strip_prefix(key)
        .and_then(|r| r.strip_prefix(' '))
        .map(|r| (n, r))
        .ok_or_else(|| Error::Parse(format!("line {n}: expected {key}")))
}

/// Inverse of [`write_records`].
pub fn read_records(text: &str) -> Result<Decomposition> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(Error::Parse("missing header".into())),
    }
    let (n, level) = header(&mut lines, "level")?;
    let level: u32 = level
        .parse()
        .map_err(|_| Error::Parse(format!("line {n}: bad level")))?;
    let (n, nodes) = header(&mut lines, "nodes")?;
    let nodes: Vec<usize> = parse_list(nodes, n)?;
    let (n, degree) = header(&mut lines, "degree")?;
    let degree = DegreeVector::new(parse_list(degree, n)?)?;
    let grid = Grid::new(nodes.len(), level, &nodes)?;
    if degree.dim() != grid.dim() {
        return Err(Error::Parse("degree and nodes lengths differ".into()));
    }
    let (n, index) = header(&mut lines, "index")?;
    let parts: Vec<&str> = index.split_whitespace().collect();
    let index_set = match parts.as_slice() {
        ["box", k] => IndexSet::Box(MultiIndex::new(parse_list(k, n)?)),
        ["cross", b, r] => IndexSet::Cross {
            beta: parse_list(b, n)?,
            radius: r
                .parse()
                .map_err(|_| Error::Parse(format!("line {n}: bad radius")))?,
        },
        _ => return Err(Error::Parse(format!("line {n}: bad index set"))),
    };
    let mut blocks: BTreeMap<MultiIndex, DetailCoeffs> = BTreeMap::new();
    for (n, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse(format!("line {n}: expected 4 fields")));
        }
        let k = MultiIndex::new(parse_list(f[0], n)?);
        let rho: Vec<usize> = parse_list(f[1], n)?;
        let i: Vec<usize> = parse_list(f[2], n)?;
        let v: f64 = f[3]
            .parse()
            .map_err(|_| Error::Parse(format!("line {n}: bad value")))?;
        if k.dim() != grid.dim() || rho.len() != grid.dim() || i.len() != grid.dim() {
            return Err(Error::Parse(format!("line {n}: wrong dimension")));
        }
        let block = blocks
            .entry(k.clone())
            .or_insert_with(|| DetailCoeffs::zeros(&k, &degree));
        let in_range = (0..grid.dim()).all(|j| rho[j] < block.positions(j) && i[j] <= degree.get(j));
        if !in_range {
            return Err(Error::Parse(format!("line {n}: index out of range")));
        }
        block.set(&rho, &i, v);
    }
    debug_assert!(blocks.iter().all(|(k, b)| b.len() == detail_dim(k, &degree)));
    Ok(Decomposition {
        grid,
        degree,
        index_set,
        blocks,
    })
}
