//! Routing and wavelength assignment for full inter-group connectivity.
//!
//! Every ordered pair of endpoints (PON groups plus the OLT) needs its own
//! wavelength such that no endpoint transmits two pairs on one wavelength
//! (row-distinctness) and no endpoint receives two pairs on one wavelength
//! (column-distinctness). The problem is equivalent to filling the
//! off-diagonal cells of an n-by-n matrix so that every row and every column
//! holds pairwise-distinct symbols; n-1 symbols always suffice and are always
//! necessary, since each row holds n-1 mutually distinct entries.
//!
//! [`solve`] finds the lexicographically smallest optimal map by exact
//! backtracking search; [`construct_cyclic`] produces the closed-form optimum
//! used as an independent certificate; [`minimal_wavelengths_bruteforce`]
//! establishes optimality by exhaustion on small instances.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Largest instance [`minimal_wavelengths_bruteforce`] accepts.
pub const BRUTE_FORCE_MAX_ENDPOINTS: usize = 5;

/// Largest instance [`solve`] accepts (bitmask palette width).
pub const SOLVE_MAX_ENDPOINTS: usize = 128;

#[derive(Debug, Error)]
pub enum RwaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{0} endpoints exceed the brute-force bound of {1}")]
    TooLarge(usize, usize),
    #[error("source and destination endpoints are equal ({0})")]
    SelfPair(usize),
    #[error("endpoint index {index} out of range for {n} endpoints")]
    OutOfRange { index: usize, n: usize },
    #[error("no wavelength assigned for ordered pair ({src}, {dst})")]
    Unassigned { src: usize, dst: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Display label for endpoint `i` in an `n`-endpoint map: groups `G1..`,
/// with the final endpoint being the OLT.
pub fn endpoint_label(i: usize, n: usize) -> String {
    if i + 1 == n {
        "OLT".to_string()
    } else {
        format!("G{}", i + 1)
    }
}

/// Wavelength routing map over `n` endpoints: one wavelength index per
/// ordered pair of distinct endpoints. The structure admits invalid states
/// (missing pairs, clashes, diagonal entries) so that [`verify`] can report
/// them; the constructors in this module only produce valid maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingMap {
    n: usize,
    entries: Vec<Option<u32>>,
}

impl RoutingMap {
    /// An unassigned map over `n >= 2` endpoints.
    pub fn empty(n: usize) -> Result<Self, RwaError> {
        if n < 2 {
            return Err(RwaError::InvalidParams(format!(
                "a routing map needs at least 2 endpoints (got {n})"
            )));
        }
        Ok(RoutingMap {
            n,
            entries: vec![None; n * n],
        })
    }

    pub fn n_endpoints(&self) -> usize {
        self.n
    }

    /// Number of distinct wavelengths used across all entries.
    pub fn n_wavelengths(&self) -> usize {
        let mut seen: Vec<u32> = self.entries.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    fn check_index(&self, i: usize) -> Result<(), RwaError> {
        if i >= self.n {
            Err(RwaError::OutOfRange {
                index: i,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    pub fn get(&self, src: usize, dst: usize) -> Option<u32> {
        self.entries.get(src * self.n + dst).copied().flatten()
    }

    /// Sets an entry. Indices are bounds-checked; validity (including the
    /// no-self-pair rule) is the verifier's concern, so mutation tests can
    /// construct broken maps.
    pub fn set(&mut self, src: usize, dst: usize, wavelength: u32) -> Result<(), RwaError> {
        self.check_index(src)?;
        self.check_index(dst)?;
        if wavelength == 0 {
            return Err(RwaError::InvalidParams(
                "wavelength indices are 1-based".into(),
            ));
        }
        self.entries[src * self.n + dst] = Some(wavelength);
        Ok(())
    }

    pub fn clear(&mut self, src: usize, dst: usize) -> Result<(), RwaError> {
        self.check_index(src)?;
        self.check_index(dst)?;
        self.entries[src * self.n + dst] = None;
        Ok(())
    }

    /// Relabels endpoints: entry (s, d) moves to (perm[s], perm[d]).
    pub fn permuted(&self, perm: &[usize]) -> Result<RoutingMap, RwaError> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || !perm.iter().all(|&p| p < self.n && !std::mem::replace(&mut seen[p], true)) {
            return Err(RwaError::InvalidParams(format!(
                "relabeling must be a permutation of 0..{}",
                self.n
            )));
        }
        let mut out = RoutingMap::empty(self.n)?;
        for s in 0..self.n {
            for d in 0..self.n {
                out.entries[perm[s] * self.n + perm[d]] = self.entries[s * self.n + d];
            }
        }
        Ok(out)
    }

    /// CSV matrix: rows as sources, columns as destinations, `-` on the
    /// diagonal and `L<k>` entries.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for d in 0..self.n {
            s.push(',');
            s.push_str(&endpoint_label(d, self.n));
        }
        s.push('\n');
        for src in 0..self.n {
            s.push_str(&endpoint_label(src, self.n));
            for dst in 0..self.n {
                s.push(',');
                match (src == dst, self.get(src, dst)) {
                    (true, None) => s.push('-'),
                    (_, Some(w)) => s.push_str(&format!("L{w}")),
                    (false, None) => s.push('-'),
                }
            }
            s.push('\n');
        }
        s
    }

    /// Parses the CSV matrix format produced by [`RoutingMap::to_csv`].
    pub fn from_csv(text: &str) -> Result<RoutingMap, RwaError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(RwaError::Parse {
            line: 1,
            msg: "empty routing map document".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || !cols[0].trim().is_empty() {
            return Err(RwaError::Parse {
                line: 1,
                msg: "header must be an empty cell followed by destination labels".into(),
            });
        }
        let n = cols.len() - 1;
        for (d, label) in cols[1..].iter().enumerate() {
            let expected = endpoint_label(d, n);
            if label.trim() != expected {
                return Err(RwaError::Parse {
                    line: 1,
                    msg: format!("column {} labeled '{}', expected '{expected}'", d + 2, label),
                });
            }
        }

        let mut map = RoutingMap::empty(n)?;
        let mut src = 0usize;
        for (idx, line) in lines {
            let lineno = idx + 1;
            if src >= n {
                return Err(RwaError::Parse {
                    line: lineno,
                    msg: format!("more than {n} data rows"),
                });
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + 1 {
                return Err(RwaError::Parse {
                    line: lineno,
                    msg: format!("expected {} fields, found {}", n + 1, fields.len()),
                });
            }
            let expected = endpoint_label(src, n);
            if fields[0].trim() != expected {
                return Err(RwaError::Parse {
                    line: lineno,
                    msg: format!("row labeled '{}', expected '{expected}'", fields[0]),
                });
            }
            for (dst, field) in fields[1..].iter().enumerate() {
                let field = field.trim();
                if field == "-" {
                    continue;
                }
                let digits = field.strip_prefix('L').ok_or_else(|| RwaError::Parse {
                    line: lineno,
                    msg: format!("entry '{field}' is neither '-' nor 'L<k>'"),
                })?;
                let w: u32 = digits.parse().map_err(|_| RwaError::Parse {
                    line: lineno,
                    msg: format!("entry '{field}' has a non-numeric wavelength"),
                })?;
                if w == 0 {
                    return Err(RwaError::Parse {
                        line: lineno,
                        msg: "wavelength indices are 1-based".into(),
                    });
                }
                map.entries[src * n + dst] = Some(w);
            }
            src += 1;
        }
        if src != n {
            return Err(RwaError::Parse {
                line: src + 1,
                msg: format!("expected {n} data rows, found {src}"),
            });
        }
        Ok(map)
    }
}

/// The published routing map for the 6-group, one-OLT design, shipped with
/// the crate as `fixtures/table1.csv`.
pub fn table1_fixture() -> RoutingMap {
    RoutingMap::from_csv(include_str!("../fixtures/table1.csv"))
        .expect("bundled routing map fixture parses")
}

/// One invariant violation found by [`verify`]. Endpoint values are indices;
/// use [`endpoint_label`] or the report's `Display` for names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RwaViolation {
    RowClash {
        src: usize,
        dst_a: usize,
        dst_b: usize,
        wavelength: u32,
    },
    ColumnClash {
        dst: usize,
        src_a: usize,
        src_b: usize,
        wavelength: u32,
    },
    MissingPair {
        src: usize,
        dst: usize,
    },
    SelfPair {
        endpoint: usize,
    },
}

impl RwaViolation {
    pub fn kind(&self) -> &'static str {
        match self {
            RwaViolation::RowClash { .. } => "row-clash",
            RwaViolation::ColumnClash { .. } => "column-clash",
            RwaViolation::MissingPair { .. } => "missing-pair",
            RwaViolation::SelfPair { .. } => "self-pair",
        }
    }

    pub fn describe(&self, n: usize) -> String {
        let l = |i| endpoint_label(i, n);
        match *self {
            RwaViolation::RowClash {
                src,
                dst_a,
                dst_b,
                wavelength,
            } => format!(
                "row-clash: {} transmits to both {} and {} on L{wavelength}",
                l(src),
                l(dst_a),
                l(dst_b)
            ),
            RwaViolation::ColumnClash {
                dst,
                src_a,
                src_b,
                wavelength,
            } => format!(
                "column-clash: {} receives from both {} and {} on L{wavelength}",
                l(dst),
                l(src_a),
                l(src_b)
            ),
            RwaViolation::MissingPair { src, dst } => {
                format!("missing-pair: no wavelength for {} -> {}", l(src), l(dst))
            }
            RwaViolation::SelfPair { endpoint } => {
                format!("self-pair: {} assigned a wavelength to itself", l(endpoint))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RwaValidationReport {
    pub n_endpoints: usize,
    pub violations: Vec<RwaViolation>,
}

impl RwaValidationReport {
    pub fn valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for RwaValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid() {
            write!(f, "valid")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{}", v.describe(self.n_endpoints))?;
            }
            Ok(())
        }
    }
}

/// Checks every routing-map invariant: totality over ordered pairs, no
/// diagonal entries, and row/column distinctness.
pub fn verify(map: &RoutingMap) -> RwaValidationReport {
    let n = map.n_endpoints();
    let mut violations = Vec::new();

    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                if map.get(src, dst).is_some() {
                    violations.push(RwaViolation::SelfPair { endpoint: src });
                }
            } else if map.get(src, dst).is_none() {
                violations.push(RwaViolation::MissingPair { src, dst });
            }
        }
    }

    for src in 0..n {
        let mut first_dst: Vec<Option<usize>> = Vec::new();
        for dst in 0..n {
            if src == dst {
                continue;
            }
            if let Some(w) = map.get(src, dst) {
                let slot = w as usize;
                if first_dst.len() <= slot {
                    first_dst.resize(slot + 1, None);
                }
                match first_dst[slot] {
                    Some(dst_a) => violations.push(RwaViolation::RowClash {
                        src,
                        dst_a,
                        dst_b: dst,
                        wavelength: w,
                    }),
                    None => first_dst[slot] = Some(dst),
                }
            }
        }
    }

    for dst in 0..n {
        let mut first_src: Vec<Option<usize>> = Vec::new();
        for src in 0..n {
            if src == dst {
                continue;
            }
            if let Some(w) = map.get(src, dst) {
                let slot = w as usize;
                if first_src.len() <= slot {
                    first_src.resize(slot + 1, None);
                }
                match first_src[slot] {
                    Some(src_a) => violations.push(RwaViolation::ColumnClash {
                        dst,
                        src_a,
                        src_b: src,
                        wavelength: w,
                    }),
                    None => first_src[slot] = Some(src),
                }
            }
        }
    }

    RwaValidationReport {
        n_endpoints: n,
        violations,
    }
}

/// Looks up the wavelength for an ordered endpoint pair.
pub fn wavelength(map: &RoutingMap, src: usize, dst: usize) -> Result<u32, RwaError> {
    let n = map.n_endpoints();
    if src >= n {
        return Err(RwaError::OutOfRange { index: src, n });
    }
    if dst >= n {
        return Err(RwaError::OutOfRange { index: dst, n });
    }
    if src == dst {
        return Err(RwaError::SelfPair(src));
    }
    map.get(src, dst).ok_or(RwaError::Unassigned { src, dst })
}

/// Closed-form optimal map: endpoint `i` transmits to endpoint `j` on
/// wavelength `(j - i) mod n`, which for distinct endpoints always lands in
/// `{1..n-1}`. Serves as the analytic certificate that n-1 wavelengths
/// suffice, independent of the search in [`solve`].
pub fn construct_cyclic(n: usize) -> Result<RoutingMap, RwaError> {
    let mut map = RoutingMap::empty(n)?;
    for src in 0..n {
        for dst in 0..n {
            if src != dst {
                let w = ((dst + n - src) % n) as u32;
                map.entries[src * n + dst] = Some(w);
            }
        }
    }
    Ok(map)
}

/// Exact solver. Reconstructs the optimization as a combinatorial search:
/// assign each ordered pair a wavelength from a palette of size `k`, subject
/// to row- and column-distinctness, minimizing `k`. Each endpoint transmits
/// to `n - 1` peers on pairwise-distinct wavelengths, so `k >= n - 1` is a
/// pigeonhole lower bound; the search starts there and grows `k` only if
/// exhaustion proves infeasibility (it never does; see [`construct_cyclic`]).
///
/// Ties among optima are broken by returning the lexicographically smallest
/// assignment in (src, dst) scan order, which makes the result deterministic.
pub fn solve(n: usize) -> Result<RoutingMap, RwaError> {
    if n < 2 {
        return Err(RwaError::InvalidParams(format!(
            "a routing map needs at least 2 endpoints (got {n})"
        )));
    }
    if n > SOLVE_MAX_ENDPOINTS {
        return Err(RwaError::InvalidParams(format!(
            "solver supports at most {SOLVE_MAX_ENDPOINTS} endpoints (got {n})"
        )));
    }
    for k in (n - 1)..=n {
        if let Some(entries) = search_lex_first(n, k) {
            return Ok(RoutingMap { n, entries });
        }
    }
    unreachable!("a map with n-1 wavelengths exists for every n >= 2");
}

/// Depth-first search over off-diagonal cells in (src, dst) scan order,
/// trying wavelengths in ascending order, with bitmask row/column pruning.
/// The first complete assignment found is the lexicographically smallest.
fn search_lex_first(n: usize, k: usize) -> Option<Vec<Option<u32>>> {
    debug_assert!(k <= 128);
    let palette: u128 = if k == 128 { !0 } else { (1u128 << k) - 1 };
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).map(move |d| (s, d)))
        .filter(|(s, d)| s != d)
        .collect();
    let mut row_used = vec![0u128; n];
    let mut col_used = vec![0u128; n];
    let mut chosen = vec![0u32; cells.len()];

    fn go(
        i: usize,
        cells: &[(usize, usize)],
        palette: u128,
        row_used: &mut [u128],
        col_used: &mut [u128],
        chosen: &mut [u32],
    ) -> bool {
        if i == cells.len() {
            return true;
        }
        let (s, d) = cells[i];
        let mut avail = palette & !(row_used[s] | col_used[d]);
        while avail != 0 {
            let bit = avail & avail.wrapping_neg();
            avail &= avail - 1;
            row_used[s] |= bit;
            col_used[d] |= bit;
            chosen[i] = bit.trailing_zeros() + 1;
            if go(i + 1, cells, palette, row_used, col_used, chosen) {
                return true;
            }
            row_used[s] &= !bit;
            col_used[d] &= !bit;
        }
        false
    }

    if !go(0, &cells, palette, &mut row_used, &mut col_used, &mut chosen) {
        return None;
    }
    let mut entries = vec![None; n * n];
    for (i, &(s, d)) in cells.iter().enumerate() {
        entries[s * n + d] = Some(chosen[i]);
    }
    Some(entries)
}

/// Independent optimality oracle: the exact minimum wavelength count found by
/// exhaustive enumeration with row/column pruning. Deliberately written
/// without the solver's bitmask machinery so the two routes stay independent.
pub fn minimal_wavelengths_bruteforce(n: usize) -> Result<usize, RwaError> {
    if n < 2 {
        return Err(RwaError::InvalidParams(format!(
            "a routing map needs at least 2 endpoints (got {n})"
        )));
    }
    if n > BRUTE_FORCE_MAX_ENDPOINTS {
        return Err(RwaError::TooLarge(n, BRUTE_FORCE_MAX_ENDPOINTS));
    }

    fn feasible(
        i: usize,
        cells: &[(usize, usize)],
        k: u32,
        by_row: &mut Vec<Vec<u32>>,
        by_col: &mut Vec<Vec<u32>>,
    ) -> bool {
        if i == cells.len() {
            return true;
        }
        let (s, d) = cells[i];
        for w in 1..=k {
            if by_row[s].contains(&w) || by_col[d].contains(&w) {
                continue;
            }
            by_row[s].push(w);
            by_col[d].push(w);
            if feasible(i + 1, cells, k, by_row, by_col) {
                return true;
            }
            by_row[s].pop();
            by_col[d].pop();
        }
        false
    }

    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|s| (0..n).map(move |d| (s, d)))
        .filter(|(s, d)| s != d)
        .collect();
    for k in 1..=(n as u32) {
        let mut by_row = vec![Vec::new(); n];
        let mut by_col = vec![Vec::new(); n];
        if feasible(0, &cells, k, &mut by_row, &mut by_col) {
            return Ok(k as usize);
        }
    }
    unreachable!("n wavelengths always suffice");
}
