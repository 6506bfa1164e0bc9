//! The binary semantic matrix: one truth row per rule over the whole
//! universe, plus equivalence classes and weight statistics.

use std::collections::HashMap;
use std::fs::File;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::bits::{self, BitRow, ColumnCounter, ROW_BYTES, ROW_WORDS};
use crate::error::FormatError;
use crate::grammar::{
    enumerate_rules, rule_count, Connective, ObjPredicate, Quantifier, RelProp, Relation, RuleAst,
    RuleIndex, SimpleProp,
};
use crate::interpreter::{matches, Interpreter, Piece, RightOf, Semantics};
use crate::par;
use crate::universe::{
    Cell, Structure, StructureIndex, CELL_KINDS, STRUCTURE_COUNT, STRUCTURE_LEN,
};

pub const MATRIX_MAGIC: [u8; 4] = *b"ODN1";
pub const MATRIX_VERSION: u16 = 1;
pub const MATRIX_HEADER_LEN: u64 = 4 + 2 + 4 + 4;

/// Truth rows of every atomic proposition (simple and relational), computed
/// in one pass over the universe.
pub struct AtomTable {
    simple: Vec<BitRow>,
    relational: Vec<BitRow>,
}

const OBJS: usize = ObjPredicate::COUNT;

fn cell_masks() -> [u16; CELL_KINDS] {
    let objects = ObjPredicate::all();
    std::array::from_fn(|k| {
        let cell = Cell::ALL[k];
        match (cell.color(), cell.shape()) {
            (Some(color), Some(shape)) => {
                let piece = Piece { position: 0, color, shape };
                objects
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| matches(&piece, o))
                    .fold(0u16, |m, (i, _)| m | 1 << i)
            }
            _ => 0,
        }
    })
}

fn for_each_bit(mask: u16, mut f: impl FnMut(usize)) {
    let mut rest = mask;
    while rest != 0 {
        f(rest.trailing_zeros() as usize);
        rest &= rest - 1;
    }
}

struct AtomCounter {
    cell_masks: [u16; CELL_KINDS],
    accepts: [[bool; STRUCTURE_LEN + 1]; 7],
    semantics: Semantics,
}

impl AtomCounter {
    fn new(semantics: Semantics) -> Self {
        AtomCounter {
            cell_masks: cell_masks(),
            accepts: std::array::from_fn(|q| std::array::from_fn(|c| Quantifier::ALL[q].accepts(c))),
            semantics,
        }
    }

    /// Witness object masks for the piece at `p`, per relation.
    fn witnesses(&self, m: &[u16; STRUCTURE_LEN], p: usize, out: &mut [u16]) {
        let left = if p > 0 { m[p - 1] } else { 0 };
        let right = if p + 1 < STRUCTURE_LEN { m[p + 1] } else { 0 };
        let before = m[..p].iter().fold(0, |a, b| a | b);
        #[cfg(feature = "left-of-relation")]
        let after = m[p + 1..].iter().fold(0, |a, b| a | b);
        for (slot, rel) in out.iter_mut().zip(Relation::ALL) {
            *slot = match rel {
                Relation::Touching => left | right,
                Relation::SurroundedBy => left & right,
                Relation::AtTheRightOf => match self.semantics.right_of {
                    RightOf::Anywhere => before,
                    RightOf::Immediate => left,
                },
                #[cfg(feature = "left-of-relation")]
                Relation::AtTheLeftOf => match self.semantics.right_of {
                    RightOf::Anywhere => after,
                    RightOf::Immediate => right,
                },
            };
        }
    }

    /// Sets bit `bit` of every atom word the structure satisfies.
    fn fill(&self, s: &Structure, bit: u32, simple: &mut [u64], relational: &mut [u64]) {
        let rels = Relation::ALL.len();
        let m: [u16; STRUCTURE_LEN] = std::array::from_fn(|p| self.cell_masks[s.cell(p).ordinal()]);
        let mut simple_counts = [0u8; OBJS];
        let mut rel_buf = [0u8; OBJS * 4 * OBJS];
        let rel_counts = &mut rel_buf[..OBJS * rels * OBJS];
        let mut witness = [0u16; 8];
        for p in 0..STRUCTURE_LEN {
            if m[p] == 0 {
                continue;
            }
            for_each_bit(m[p], |o| simple_counts[o] += 1);
            self.witnesses(&m, p, &mut witness[..rels]);
            for_each_bit(m[p], |subj| {
                for (r, &w) in witness[..rels].iter().enumerate() {
                    let base = (subj * rels + r) * OBJS;
                    for_each_bit(w, |o| rel_counts[base + o] += 1);
                }
            });
        }
        let flag = 1u64 << bit;
        for (q, accepts) in self.accepts.iter().enumerate() {
            for (o, &c) in simple_counts.iter().enumerate() {
                if accepts[c as usize] {
                    simple[q * OBJS + o] |= flag;
                }
            }
            let per_qty = rel_counts.len();
            for (k, &c) in rel_counts.iter().enumerate() {
                if accepts[c as usize] {
                    relational[q * per_qty + k] |= flag;
                }
            }
        }
    }
}

impl AtomTable {
    pub fn build() -> Self {
        Self::build_with(Semantics::default())
    }

    pub fn build_with(semantics: Semantics) -> Self {
        let counter = AtomCounter::new(semantics);
        let n_simple = SimpleProp::COUNT;
        let n_rel = RelProp::count();
        // One block of atom words per 64 structures, transposed afterwards.
        let blocks: Vec<(Vec<u64>, Vec<u64>)> = par::map_range(ROW_WORDS, |w| {
            let mut simple = vec![0u64; n_simple];
            let mut relational = vec![0u64; n_rel];
            let start = w * 64;
            let end = (start + 64).min(STRUCTURE_COUNT);
            for i in start..end {
                let s = Structure::from_index(StructureIndex::new_unchecked(i));
                counter.fill(&s, (i - start) as u32, &mut simple, &mut relational);
            }
            (simple, relational)
        });
        let mut simple = vec![vec![0u64; ROW_WORDS]; n_simple];
        let mut relational = vec![vec![0u64; ROW_WORDS]; n_rel];
        for (w, (s, r)) in blocks.into_iter().enumerate() {
            for (a, word) in s.into_iter().enumerate() {
                simple[a][w] = word;
            }
            for (a, word) in r.into_iter().enumerate() {
                relational[a][w] = word;
            }
        }
        AtomTable {
            simple: simple.iter().map(|w| BitRow::from_words(w)).collect(),
            relational: relational.iter().map(|w| BitRow::from_words(w)).collect(),
        }
    }

    pub fn simple_row(&self, p: &SimpleProp) -> &BitRow {
        &self.simple[p.ordinal()]
    }

    pub fn relational_row(&self, p: &RelProp) -> &BitRow {
        &self.relational[p.ordinal()]
    }

    /// Writes the row of `rule` into `out` (length [`ROW_WORDS`]).
    pub fn write_row(&self, rule: &RuleAst, out: &mut [u64]) {
        match rule {
            RuleAst::Simple(p) => out.copy_from_slice(self.simple_row(p).words()),
            RuleAst::Relational(p) => out.copy_from_slice(self.relational_row(p).words()),
            RuleAst::Conj { left, op, right } => {
                let l = self.simple_row(left).words();
                let r = self.simple_row(right).words();
                for ((o, a), b) in out.iter_mut().zip(l).zip(r) {
                    *o = match op {
                        Connective::And => a & b,
                        Connective::Or => a | b,
                    };
                }
            }
        }
    }

    pub fn row(&self, rule: &RuleAst) -> BitRow {
        let mut words = vec![0u64; ROW_WORDS];
        self.write_row(rule, &mut words);
        BitRow::from_words(&words)
    }
}

/// Rules x structures, rule-major, one packed row per rule in canonical order.
#[derive(Clone, PartialEq, Eq)]
pub struct SemanticMatrix {
    rule_count: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for SemanticMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SemanticMatrix({} x {})", self.rule_count, STRUCTURE_COUNT)
    }
}

impl SemanticMatrix {
    pub fn rule_count(&self) -> usize {
        self.rule_count
    }

    pub fn structure_count(&self) -> usize {
        STRUCTURE_COUNT
    }

    pub fn row_words(&self, rule: RuleIndex) -> &[u64] {
        let start = rule.get() * ROW_WORDS;
        &self.words[start..start + ROW_WORDS]
    }

    pub(crate) fn row_words_at(&self, rule: usize) -> &[u64] {
        &self.words[rule * ROW_WORDS..(rule + 1) * ROW_WORDS]
    }

    pub fn row(&self, rule: RuleIndex) -> BitRow {
        BitRow::from_words(self.row_words(rule))
    }

    #[inline]
    pub fn bit(&self, rule: RuleIndex, structure: StructureIndex) -> bool {
        bits::get_bit(self.row_words(rule), structure.get())
    }
}

/// Builds the full matrix under the default semantics.
pub fn build_matrix() -> SemanticMatrix {
    build_matrix_with(&AtomTable::build())
}

pub fn build_matrix_with(atoms: &AtomTable) -> SemanticMatrix {
    let rules = rule_count();
    let mut words = vec![0u64; rules * ROW_WORDS];
    par::for_each_chunk_mut(&mut words, ROW_WORDS, |i, out| {
        let rule = RuleIndex::new(i).expect("row index within rule count").rule();
        atoms.write_row(&rule, out);
    });
    SemanticMatrix { rule_count: rules, words }
}

/// Builds a matrix for an arbitrary rule list by direct evaluation; rows in list order.
pub fn build_matrix_naive(interpreter: &Interpreter, rules: &[RuleAst]) -> Vec<BitRow> {
    par::map_range(rules.len(), |i| interpreter.evaluate_row_naive(&rules[i]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquivalenceClass {
    pub representative: RuleIndex,
    pub members: Vec<RuleIndex>,
}

/// Partition of all rules by identical truth rows.
#[derive(Debug, Clone)]
pub struct EquivalenceClasses {
    classes: Vec<EquivalenceClass>,
    class_of: Vec<u32>,
}

impl EquivalenceClasses {
    /// Classes ordered by representative.
    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Position of the class holding `rule` in [`Self::classes`].
    pub fn class_id(&self, rule: RuleIndex) -> usize {
        self.class_of[rule.get()] as usize
    }

    pub fn class_of(&self, rule: RuleIndex) -> &EquivalenceClass {
        &self.classes[self.class_id(rule)]
    }

    pub fn representatives(&self) -> impl Iterator<Item = RuleIndex> + '_ {
        self.classes.iter().map(|c| c.representative)
    }

    pub fn same_class(&self, a: RuleIndex, b: RuleIndex) -> bool {
        self.class_of[a.get()] == self.class_of[b.get()]
    }
}

fn row_hash(words: &[u64]) -> u64 {
    let mut h = DefaultHasher::new();
    words.hash(&mut h);
    h.finish()
}

/// Groups rules by exact row equality: hash first, then full comparison.
pub fn equivalence_classes(m: &SemanticMatrix) -> EquivalenceClasses {
    let hashes = par::map_range(m.rule_count(), |i| row_hash(m.row_words_at(i)));
    let mut buckets: HashMap<u64, Vec<u32>> = HashMap::new();
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    let mut class_of = Vec::with_capacity(m.rule_count());
    for (i, h) in hashes.into_iter().enumerate() {
        let rule = RuleIndex::new(i).expect("row index within rule count");
        let bucket = buckets.entry(h).or_default();
        let found = bucket.iter().copied().find(|&c| {
            let rep = classes[c as usize].representative;
            m.row_words(rep) == m.row_words_at(i)
        });
        let class = match found {
            Some(c) => c,
            None => {
                let c = classes.len() as u32;
                classes.push(EquivalenceClass { representative: rule, members: Vec::new() });
                bucket.push(c);
                c
            }
        };
        classes[class as usize].members.push(rule);
        class_of.push(class);
    }
    EquivalenceClasses { classes, class_of }
}

pub fn row_weights(m: &SemanticMatrix) -> Vec<u32> {
    par::map_range(m.rule_count(), |i| bits::popcount(m.row_words_at(i)) as u32)
}

pub fn column_weights(m: &SemanticMatrix) -> Vec<u32> {
    const CHUNK: usize = 32;
    let chunks = ROW_WORDS.div_ceil(CHUNK);
    let parts = par::map_range(chunks, |c| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(ROW_WORDS);
        let mut counter = ColumnCounter::new(end - start);
        for r in 0..m.rule_count() {
            counter.add(&m.row_words_at(r)[start..end]);
        }
        counter.counts((end - start) * 64)
    });
    let mut out: Vec<u32> = parts.into_iter().flatten().collect();
    out.truncate(STRUCTURE_COUNT);
    out
}

/// Whether two rules have identical truth rows.
pub fn rules_equivalent(a: &RuleAst, b: &RuleAst, matrix: Option<&SemanticMatrix>) -> bool {
    match matrix {
        Some(m) => m.row_words(a.index()) == m.row_words(b.index()),
        None => {
            let interp = Interpreter::default();
            interp.evaluate_row(a) == interp.evaluate_row(b)
        }
    }
}

/// A built matrix together with its equivalence classes; the shared
/// read-only context for dataset generation, solving and scoring.
#[derive(Debug)]
pub struct World {
    matrix: SemanticMatrix,
    classes: EquivalenceClasses,
}

impl World {
    pub fn new(matrix: SemanticMatrix) -> Self {
        let classes = equivalence_classes(&matrix);
        World { matrix, classes }
    }

    /// Builds the matrix under the default semantics.
    pub fn build() -> Self {
        World::new(build_matrix())
    }

    pub fn matrix(&self) -> &SemanticMatrix {
        &self.matrix
    }

    pub fn classes(&self) -> &EquivalenceClasses {
        &self.classes
    }

    #[inline]
    pub fn label(&self, rule: RuleIndex, s: &Structure) -> bool {
        self.matrix.bit(rule, s.index())
    }

    pub fn labels(&self, rule: RuleIndex, structures: &[Structure]) -> Vec<bool> {
        structures.iter().map(|s| self.label(rule, s)).collect()
    }

    pub fn representative_row(&self, class: usize) -> &[u64] {
        self.matrix.row_words(self.classes.classes()[class].representative)
    }

    pub fn equivalent(&self, a: RuleIndex, b: RuleIndex) -> bool {
        self.classes.same_class(a, b)
    }

    /// Classes whose rows agree with every `(structure, label)` pair.
    pub fn consistent_classes<'a>(
        &'a self,
        observations: impl Iterator<Item = (Structure, bool)> + Clone + 'a,
    ) -> impl Iterator<Item = usize> + 'a {
        (0..self.classes.len()).filter(move |&c| {
            let row = self.representative_row(c);
            observations.clone().all(|(s, y)| bits::get_bit(row, s.index().get()) == y)
        })
    }
}

/// Expected file size for `rules` rows.
pub fn matrix_file_len(rules: usize) -> u64 {
    MATRIX_HEADER_LEN + rules as u64 * ROW_BYTES as u64
}

pub fn write_matrix<W: Write>(m: &SemanticMatrix, mut out: W) -> io::Result<()> {
    out.write_all(&MATRIX_MAGIC)?;
    out.write_all(&MATRIX_VERSION.to_le_bytes())?;
    out.write_all(&(m.rule_count as u32).to_le_bytes())?;
    out.write_all(&(STRUCTURE_COUNT as u32).to_le_bytes())?;
    let mut bytes = vec![0u8; ROW_WORDS * 8];
    for r in 0..m.rule_count {
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(m.row_words_at(r)) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        out.write_all(&bytes[..ROW_BYTES])?;
    }
    out.flush()
}

pub fn read_matrix<R: Read>(mut input: R) -> Result<SemanticMatrix, FormatError> {
    let mut header = [0u8; MATRIX_HEADER_LEN as usize];
    read_exactly(&mut input, &mut header, MATRIX_HEADER_LEN, 0)?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != MATRIX_MAGIC {
        return Err(FormatError::Magic(magic));
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    if version != MATRIX_VERSION {
        return Err(FormatError::Version(version));
    }
    let rules = u32::from_le_bytes(header[6..10].try_into().unwrap()) as usize;
    let structures = u32::from_le_bytes(header[10..14].try_into().unwrap()) as usize;
    if structures != STRUCTURE_COUNT {
        return Err(FormatError::Dimensions(format!(
            "{structures} structures, expected {STRUCTURE_COUNT}"
        )));
    }
    if rules != rule_count() {
        return Err(FormatError::Dimensions(format!(
            "{rules} rules, this grammar has {}",
            rule_count()
        )));
    }
    let expected = matrix_file_len(rules);
    let mut words = vec![0u64; rules * ROW_WORDS];
    let mut bytes = vec![0u8; ROW_WORDS * 8];
    for (r, row) in words.chunks_exact_mut(ROW_WORDS).enumerate() {
        let read_so_far = MATRIX_HEADER_LEN + (r * ROW_BYTES) as u64;
        read_exactly(&mut input, &mut bytes[..ROW_BYTES], expected, read_so_far)?;
        for (word, chunk) in row.iter_mut().zip(bytes.chunks_exact(8)) {
            *word = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        let tail = STRUCTURE_COUNT % 64;
        if tail != 0 {
            row[ROW_WORDS - 1] &= (1u64 << tail) - 1;
        }
    }
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(FormatError::Dimensions("trailing bytes after last row".into()));
    }
    Ok(SemanticMatrix { rule_count: rules, words })
}

fn read_exactly<R: Read>(
    input: &mut R,
    buf: &mut [u8],
    expected: u64,
    offset: u64,
) -> Result<(), FormatError> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(FormatError::Truncated { expected, found: offset + filled as u64 })
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn save_matrix(m: &SemanticMatrix, path: &Path) -> Result<(), FormatError> {
    let file = File::create(path)?;
    write_matrix(m, BufWriter::with_capacity(1 << 20, file))?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<SemanticMatrix, FormatError> {
    let file = File::open(path)?;
    read_matrix(BufReader::with_capacity(1 << 20, file))
}

/// Summary statistics of a matrix and its equivalence classes.
#[derive(Debug, Clone, Serialize)]
pub struct MatrixCensus {
    pub rule_count: usize,
    pub structure_count: usize,
    pub class_count: usize,
    pub singleton_classes: usize,
    pub largest_class: usize,
    /// `(class size, number of classes of that size)`, ascending by size.
    pub class_size_histogram: Vec<(usize, usize)>,
    pub all_false_rules: usize,
    pub all_true_rules: usize,
    pub min_column_weight: u32,
    pub max_column_weight: u32,
    pub mean_column_weight: f64,
}

/// Column weights reported for comparison with the published band.
pub const REPORTED_COLUMN_BAND: (u32, u32) = (10_000, 14_000);

pub fn census(
    m: &SemanticMatrix,
    classes: &EquivalenceClasses,
    rows: &[u32],
    columns: &[u32],
) -> MatrixCensus {
    let mut sizes: HashMap<usize, usize> = HashMap::new();
    for c in classes.classes() {
        *sizes.entry(c.members.len()).or_default() += 1;
    }
    let mut class_size_histogram: Vec<(usize, usize)> = sizes.into_iter().collect();
    class_size_histogram.sort_unstable();
    MatrixCensus {
        rule_count: m.rule_count(),
        structure_count: m.structure_count(),
        class_count: classes.len(),
        singleton_classes: class_size_histogram.iter().find(|(s, _)| *s == 1).map_or(0, |h| h.1),
        largest_class: class_size_histogram.last().map_or(0, |h| h.0),
        class_size_histogram,
        all_false_rules: rows.iter().filter(|&&w| w == 0).count(),
        all_true_rules: rows.iter().filter(|&&w| w as usize == STRUCTURE_COUNT).count(),
        min_column_weight: columns.iter().copied().min().unwrap_or(0),
        max_column_weight: columns.iter().copied().max().unwrap_or(0),
        mean_column_weight: columns.iter().map(|&w| w as f64).sum::<f64>() / columns.len().max(1) as f64,
    }
}

/// `rule_index,canonical_text,weight`
pub fn write_rule_weights_csv<W: Write>(rows: &[u32], mut out: W) -> io::Result<()> {
    writeln!(out, "rule_index,canonical_text,weight")?;
    for (rule, weight) in enumerate_rules().zip(rows) {
        writeln!(out, "{},{},{}", rule.index().get(), rule.render(), weight)?;
    }
    out.flush()
}

/// `structure_index,text,weight`
pub fn write_structure_weights_csv<W: Write>(columns: &[u32], mut out: W) -> io::Result<()> {
    writeln!(out, "structure_index,text,weight")?;
    for (i, weight) in columns.iter().enumerate() {
        let s = Structure::from_index(StructureIndex::new_unchecked(i));
        writeln!(out, "{},{},{}", i, s.render(), weight)?;
    }
    out.flush()
}
