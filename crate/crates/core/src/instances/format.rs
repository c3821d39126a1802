//! Line-oriented text format for decomposable problems.
//!
//! ```text
//! sfm-instance v1
//! n 4
//! block chain
//! path 3 0 1 2 1e0 5e-1        # m indices, m−1 weights
//! offset 2 0 -1e0 3 2.5e-1     # k (index, value) pairs
//! end
//! block concave
//! group 3 1 2 3 2e0 0e0 -2e0   # m indices, m gains
//! end
//! block generic
//! table 2 0 3 0e0 1e0 1e0 0e0  # k indices, 2^k values by bit pattern
//! end
//! block modular
//! offset 1 2 -5e-1
//! end
//! grid 2 2
//! ```
//!
//! Numbers are written in shortest round-trip exponent form, so parsing a
//! serialized file restores every value bit for bit. `#` starts a comment.

use std::fs;
use std::path::Path as FsPath;

use crate::error::{Result, SfmError};
use crate::prox::{Block, BlockFamily, BlockKind, ConcaveGroup, Path, Table};
use crate::solvers::DecomposableProblem;

const HEADER: &str = "sfm-instance v1";

/// A parsed instance: ground set size, blocks and optional grid shape.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub n: usize,
    pub blocks: Vec<Block>,
    pub grid: Option<(usize, usize)>,
}

impl InstanceFile {
    pub fn new(n: usize, blocks: Vec<Block>) -> Self {
        Self { n, blocks, grid: None }
    }

    pub fn to_problem(&self) -> Result<DecomposableProblem> {
        DecomposableProblem::new(self.n, self.blocks.clone())
    }

    pub fn read(path: impl AsRef<FsPath>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<FsPath>) -> Result<()> {
        fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{HEADER}\nn {}\n", self.n);
        for b in &self.blocks {
            out.push_str(&format!("block {}\n", b.family().name()));
            match b.kind() {
                BlockKind::Modular => {}
                BlockKind::Chain(paths) => {
                    for p in paths {
                        out.push_str(&format!("path {}{}{}\n", p.indices.len(), ints(&p.indices), reals(&p.weights)));
                    }
                }
                BlockKind::Concave(groups) => {
                    for g in groups {
                        out.push_str(&format!("group {}{}{}\n", g.indices.len(), ints(&g.indices), reals(&g.gains)));
                    }
                }
                BlockKind::Generic(tables) => {
                    for t in tables {
                        out.push_str(&format!("table {}{}{}\n", t.indices.len(), ints(&t.indices), reals(&t.values)));
                    }
                }
            }
            if !b.offset().is_empty() {
                out.push_str(&format!("offset {}", b.offset().len()));
                for (i, v) in b.offset() {
                    out.push_str(&format!(" {i} {v:e}"));
                }
                out.push('\n');
            }
            out.push_str("end\n");
        }
        if let Some((h, w)) = self.grid {
            out.push_str(&format!("grid {h} {w}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        match lines.next() {
            Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["sfm-instance", "v1"] => {}
            Some((line, l)) => return Err(parse_err(line, format!("expected `{HEADER}`, found `{l}`"))),
            None => return Err(parse_err(0, "empty instance file")),
        }
        let n = match lines.next() {
            Some((line, l)) => {
                let mut t = Tokens::new(line, l);
                t.keyword("n")?;
                let n = t.usize()?;
                t.finish()?;
                n
            }
            None => return Err(parse_err(0, "missing `n` line")),
        };

        let mut blocks = Vec::new();
        let mut grid = None;
        while let Some((line, l)) = lines.next() {
            let mut t = Tokens::new(line, l);
            match t.word()? {
                "block" => {
                    let family = match t.word()? {
                        "modular" => BlockFamily::Modular,
                        "chain" => BlockFamily::Chain,
                        "concave" => BlockFamily::Concave,
                        "generic" => BlockFamily::Generic,
                        other => return Err(parse_err(line, format!("unknown block family `{other}`"))),
                    };
                    t.finish()?;
                    blocks.push(parse_block(n, family, line, &mut lines)?);
                }
                "grid" => {
                    let (h, w) = (t.usize()?, t.usize()?);
                    t.finish()?;
                    if h * w != n {
                        return Err(parse_err(line, format!("grid {h}x{w} does not match n = {n}")));
                    }
                    grid = Some((h, w));
                }
                other => return Err(parse_err(line, format!("unexpected `{other}`"))),
            }
        }
        if blocks.is_empty() {
            return Err(parse_err(0, "an instance needs at least one block"));
        }
        Ok(Self { n, blocks, grid })
    }
}

fn parse_block<'a>(n: usize, family: BlockFamily, start: usize, lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Block> {
    let mut paths = Vec::new();
    let mut groups = Vec::new();
    let mut tables = Vec::new();
    let mut offset = Vec::new();
    loop {
        let Some((line, l)) = lines.next() else {
            return Err(parse_err(start, "block is missing its `end`"));
        };
        let mut t = Tokens::new(line, l);
        let word = t.word()?;
        let allowed = match word {
            "end" => true,
            "offset" => true,
            "path" => family == BlockFamily::Chain,
            "group" => family == BlockFamily::Concave,
            "table" => family == BlockFamily::Generic,
            _ => return Err(parse_err(line, format!("unexpected `{word}` inside a block"))),
        };
        if !allowed {
            return Err(parse_err(line, format!("`{word}` is not allowed in a {} block", family.name())));
        }
        match word {
            "end" => {
                t.finish()?;
                break;
            }
            "offset" => {
                let k = t.usize()?;
                for _ in 0..k {
                    offset.push((t.index(n)?, t.real()?));
                }
            }
            "path" => {
                let m = t.usize()?;
                let indices = t.indices(m, n)?;
                let weights = t.reals(m.saturating_sub(1))?;
                paths.push(Path { indices, weights });
            }
            "group" => {
                let m = t.usize()?;
                let indices = t.indices(m, n)?;
                let gains = t.reals(m)?;
                groups.push(ConcaveGroup { indices, gains });
            }
            _ => {
                let k = t.usize()?;
                if k > 20 {
                    return Err(parse_err(line, format!("table over {k} elements is too large")));
                }
                let indices = t.indices(k, n)?;
                let values = t.reals(1 << k)?;
                tables.push(Table::new(indices, values).map_err(|e| parse_err(line, e.to_string()))?);
            }
        }
        t.finish()?;
    }
    let kind = match family {
        BlockFamily::Modular => BlockKind::Modular,
        BlockFamily::Chain => BlockKind::Chain(paths),
        BlockFamily::Concave => BlockKind::Concave(groups),
        BlockFamily::Generic => BlockKind::Generic(tables),
    };
    Block::new(n, kind, offset).map_err(|e| parse_err(start, e.to_string()))
}

fn parse_err(line: usize, msg: impl Into<String>) -> SfmError {
    SfmError::Parse { line, msg: msg.into() }
}

fn ints(v: &[usize]) -> String {
    v.iter().map(|i| format!(" {i}")).collect()
}

fn reals(v: &[f64]) -> String {
    v.iter().map(|x| format!(" {x:e}")).collect()
}

struct Tokens<'a> {
    line: usize,
    iter: std::str::SplitWhitespace<'a>,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Self {
            line,
            iter: text.split_whitespace(),
        }
    }

    fn word(&mut self) -> Result<&'a str> {
        self.iter.next().ok_or_else(|| parse_err(self.line, "unexpected end of line"))
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let w = self.word()?;
        if w == kw {
            Ok(())
        } else {
            Err(parse_err(self.line, format!("expected `{kw}`, found `{w}`")))
        }
    }

    fn usize(&mut self) -> Result<usize> {
        let w = self.word()?;
        w.parse().map_err(|_| parse_err(self.line, format!("`{w}` is not a nonnegative integer")))
    }

    fn index(&mut self, n: usize) -> Result<usize> {
        let i = self.usize()?;
        if i >= n {
            return Err(parse_err(self.line, format!("index {i} out of range for n = {n}")));
        }
        Ok(i)
    }

    fn indices(&mut self, m: usize, n: usize) -> Result<Vec<usize>> {
        (0..m).map(|_| self.index(n)).collect()
    }

    fn real(&mut self) -> Result<f64> {
        let w = self.word()?;
        match w.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(parse_err(self.line, format!("`{w}` is not a finite number"))),
        }
    }

    fn reals(&mut self, m: usize) -> Result<Vec<f64>> {
        (0..m).map(|_| self.real()).collect()
    }

    fn finish(&mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some(w) => Err(parse_err(self.line, format!("trailing token `{w}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
sfm-instance v1
# comment line
n 4
block chain
path 3 0 1 2 1e0 5e-1   # trailing comment
offset 2 0 -1e0 3 0.25
end
block concave
group 3 1 2 3 2 0 -2
end
block generic
table 2 0 3 0 1 1 0
end
block modular
offset 1 2 -5e-1
end
grid 2 2
";

    #[test]
    fn parses_and_round_trips() {
        let f = InstanceFile::parse(SAMPLE).unwrap();
        assert_eq!(f.n, 4);
        assert_eq!(f.blocks.len(), 4);
        assert_eq!(f.grid, Some((2, 2)));
        let text = f.serialize();
        let g = InstanceFile::parse(&text).unwrap();
        assert_eq!(f, g);
        assert_eq!(text, g.serialize());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let vals = [0.1, 1.0 / 3.0, -2.0f64.sqrt(), 1e-300, 6.02214076e23];
        let offset: Vec<(usize, f64)> = vals.iter().copied().enumerate().collect();
        let f = InstanceFile::new(5, vec![Block::modular(5, offset).unwrap()]);
        let g = InstanceFile::parse(&f.serialize()).unwrap();
        for ((_, a), (_, b)) in f.blocks[0].offset().iter().zip(g.blocks[0].offset()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            ("", 0),
            ("sfm-instance v2\nn 2\n", 1),
            ("sfm-instance v1\nn 2\nblock chain\npath 2 0 1 -1\nend\n", 3),
            ("sfm-instance v1\nn 2\nblock chain\npath 2 0 5 1\nend\n", 4),
            ("sfm-instance v1\nn 2\nblock concave\npath 2 0 1 1\nend\n", 4),
            ("sfm-instance v1\nn 2\nblock modular\noffset 1 0 x\nend\n", 4),
            ("sfm-instance v1\nn 2\nblock modular\n", 3),
            ("sfm-instance v1\nn 2\n", 0),
            ("sfm-instance v1\nn 2\nblock modular\nend\ngrid 3 3\n", 5),
        ];
        for (text, line) in cases {
            match InstanceFile::parse(text) {
                Err(SfmError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
