//! The Odeen universe: every row of six cells, each empty or holding a red
//! or blue square, upward pyramid or downward pyramid.
//!
//! Structures are written as six characters from `. q u d Q U D`
//! (lowercase blue, uppercase red) and indexed in base 7 with the leftmost
//! cell as the most significant digit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::EncodingError;

/// Number of cells in a structure.
pub const STRUCTURE_LEN: usize = 6;

/// Number of distinct cell values.
pub const CELL_KINDS: usize = 7;

/// `7^6`, the size of the universe.
pub const STRUCTURE_COUNT: usize = 117_649;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    Red,
    Blue,
}

/// Shape of a physical piece (as opposed to the grammar's shape predicates,
/// which also include "any pyramid").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PieceShape {
    Square,
    PyramidUp,
    PyramidDown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Cell {
    #[default]
    Empty,
    BlueSquare,
    BluePyramidUp,
    BluePyramidDown,
    RedSquare,
    RedPyramidUp,
    RedPyramidDown,
}

impl Cell {
    /// All cells in canonical order.
    pub const ALL: [Cell; CELL_KINDS] = [
        Cell::Empty,
        Cell::BlueSquare,
        Cell::BluePyramidUp,
        Cell::BluePyramidDown,
        Cell::RedSquare,
        Cell::RedPyramidUp,
        Cell::RedPyramidDown,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(n: usize) -> Option<Cell> {
        Cell::ALL.get(n).copied()
    }

    pub fn to_char(self) -> char {
        match self {
            Cell::Empty => '.',
            Cell::BlueSquare => 'q',
            Cell::BluePyramidUp => 'u',
            Cell::BluePyramidDown => 'd',
            Cell::RedSquare => 'Q',
            Cell::RedPyramidUp => 'U',
            Cell::RedPyramidDown => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Cell> {
        Some(match c {
            '.' => Cell::Empty,
            'q' => Cell::BlueSquare,
            'u' => Cell::BluePyramidUp,
            'd' => Cell::BluePyramidDown,
            'Q' => Cell::RedSquare,
            'U' => Cell::RedPyramidUp,
            'D' => Cell::RedPyramidDown,
            _ => return None,
        })
    }

    pub fn color(self) -> Option<Color> {
        match self {
            Cell::Empty => None,
            Cell::BlueSquare | Cell::BluePyramidUp | Cell::BluePyramidDown => Some(Color::Blue),
            _ => Some(Color::Red),
        }
    }

    pub fn shape(self) -> Option<PieceShape> {
        match self {
            Cell::Empty => None,
            Cell::BlueSquare | Cell::RedSquare => Some(PieceShape::Square),
            Cell::BluePyramidUp | Cell::RedPyramidUp => Some(PieceShape::PyramidUp),
            Cell::BluePyramidDown | Cell::RedPyramidDown => Some(PieceShape::PyramidDown),
        }
    }

    pub fn is_empty(self) -> bool {
        self == Cell::Empty
    }
}

/// Index of a structure in canonical universe order, in `[0, STRUCTURE_COUNT)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StructureIndex(u32);

impl StructureIndex {
    pub fn new(index: usize) -> Result<Self, EncodingError> {
        if index < STRUCTURE_COUNT {
            Ok(StructureIndex(index as u32))
        } else {
            Err(EncodingError::IndexOutOfRange { index, limit: STRUCTURE_COUNT })
        }
    }

    /// Caller guarantees `index < STRUCTURE_COUNT`.
    pub(crate) const fn new_unchecked(index: usize) -> Self {
        StructureIndex(index as u32)
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn structure(self) -> Structure {
        Structure::from_index(self)
    }
}

/// One observation: six cells, position 0 leftmost.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Structure {
    cells: [Cell; STRUCTURE_LEN],
}

impl Structure {
    pub const EMPTY: Structure = Structure { cells: [Cell::Empty; STRUCTURE_LEN] };

    pub fn new(cells: [Cell; STRUCTURE_LEN]) -> Self {
        Structure { cells }
    }

    pub fn cells(&self) -> &[Cell; STRUCTURE_LEN] {
        &self.cells
    }

    pub fn cell(&self, position: usize) -> Cell {
        self.cells[position]
    }

    pub fn with_cell(mut self, position: usize, cell: Cell) -> Self {
        self.cells[position] = cell;
        self
    }

    pub fn parse(text: &str) -> Result<Self, EncodingError> {
        let count = text.chars().count();
        if count != STRUCTURE_LEN {
            return Err(EncodingError::Length { found: count });
        }
        let mut cells = [Cell::Empty; STRUCTURE_LEN];
        for (position, c) in text.chars().enumerate() {
            cells[position] =
                Cell::from_char(c).ok_or(EncodingError::Symbol { position, symbol: c })?;
        }
        Ok(Structure { cells })
    }

    pub fn render(&self) -> String {
        self.cells.iter().map(|c| c.to_char()).collect()
    }

    pub fn index(&self) -> StructureIndex {
        let index = self.cells.iter().fold(0usize, |acc, c| acc * CELL_KINDS + c.ordinal());
        StructureIndex::new_unchecked(index)
    }

    pub fn from_index(index: StructureIndex) -> Self {
        let mut rest = index.get();
        let mut cells = [Cell::Empty; STRUCTURE_LEN];
        for slot in cells.iter_mut().rev() {
            *slot = Cell::ALL[rest % CELL_KINDS];
            rest /= CELL_KINDS;
        }
        Structure { cells }
    }

    /// Number of positions where the two structures hold different cells.
    pub fn cell_distance(&self, other: &Structure) -> usize {
        self.cells.iter().zip(other.cells.iter()).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Structure({})", self.render())
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for Structure {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Structure::parse(s)
    }
}

impl Serialize for Structure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.render())
    }
}

impl<'de> Deserialize<'de> for Structure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Structure::parse(&text).map_err(serde::de::Error::custom)
    }
}

pub fn parse_structure(text: &str) -> Result<Structure, EncodingError> {
    Structure::parse(text)
}

pub fn render_structure(structure: &Structure) -> String {
    structure.render()
}

/// All structures in index order.
pub fn enumerate_universe() -> impl ExactSizeIterator<Item = Structure> + Clone {
    (0..STRUCTURE_COUNT).map(|i| Structure::from_index(StructureIndex::new_unchecked(i)))
}
