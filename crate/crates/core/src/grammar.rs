//! The Odeen rule language.
//!
//! ```text
//! RULE   := PROP_S | PROP | PROP_S CONJ PROP_S
//! PROP   := QTY OBJ REL OBJ
//! PROP_S := QTY OBJ
//! OBJ    := COL | SHAPE | COL SHAPE
//! QTY    := at_least NUM | exactly NUM | at_most NUM | zero
//! SHAPE  := pyramid ORIEN | pyramid | block
//! REL    := touching | surrounded_by | at_the_right_of
//! ORIEN  := pointing_up | pointing_down
//! NUM    := 1 | 2
//! CONJ   := and | or
//! COL    := red | blue
//! ```
//!
//! Rules are enumerated in a canonical order: the three `RULE` alternatives
//! in the order above, the rightmost field varying fastest, and every
//! field's alternatives in listing order. [`RuleIndex`] is the position in
//! that order.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EncodingError, SyntaxError};
use crate::universe::Color;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Num {
    One,
    Two,
}

impl Num {
    pub fn value(self) -> u8 {
        match self {
            Num::One => 1,
            Num::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quantifier {
    AtLeast(Num),
    Exactly(Num),
    AtMost(Num),
    Zero,
}

impl Quantifier {
    pub const ALL: [Quantifier; 7] = [
        Quantifier::AtLeast(Num::One),
        Quantifier::AtLeast(Num::Two),
        Quantifier::Exactly(Num::One),
        Quantifier::Exactly(Num::Two),
        Quantifier::AtMost(Num::One),
        Quantifier::AtMost(Num::Two),
        Quantifier::Zero,
    ];

    pub fn ordinal(self) -> usize {
        match self {
            Quantifier::AtLeast(n) => n as usize,
            Quantifier::Exactly(n) => 2 + n as usize,
            Quantifier::AtMost(n) => 4 + n as usize,
            Quantifier::Zero => 6,
        }
    }

    pub fn accepts(self, count: usize) -> bool {
        match self {
            Quantifier::AtLeast(n) => count >= n.value() as usize,
            Quantifier::Exactly(n) => count == n.value() as usize,
            Quantifier::AtMost(n) => count <= n.value() as usize,
            Quantifier::Zero => count == 0,
        }
    }

    fn push_tokens(self, out: &mut Vec<Token>) {
        let (head, num) = match self {
            Quantifier::AtLeast(n) => (Token::AtLeast, Some(n)),
            Quantifier::Exactly(n) => (Token::Exactly, Some(n)),
            Quantifier::AtMost(n) => (Token::AtMost, Some(n)),
            Quantifier::Zero => (Token::Zero, None),
        };
        out.push(head);
        match num {
            Some(Num::One) => out.push(Token::One),
            Some(Num::Two) => out.push(Token::Two),
            None => {}
        }
    }
}

/// Shape predicate. `Pyramid` matches both orientations; `Block` is a square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapePredicate {
    PyramidUp,
    PyramidDown,
    Pyramid,
    Block,
}

impl ShapePredicate {
    pub const ALL: [ShapePredicate; 4] = [
        ShapePredicate::PyramidUp,
        ShapePredicate::PyramidDown,
        ShapePredicate::Pyramid,
        ShapePredicate::Block,
    ];

    fn push_tokens(self, out: &mut Vec<Token>) {
        match self {
            ShapePredicate::PyramidUp => out.extend([Token::Pyramid, Token::PointingUp]),
            ShapePredicate::PyramidDown => out.extend([Token::Pyramid, Token::PointingDown]),
            ShapePredicate::Pyramid => out.push(Token::Pyramid),
            ShapePredicate::Block => out.push(Token::Block),
        }
    }
}

/// An object description: a color, a shape, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjPredicate {
    color: Option<Color>,
    shape: Option<ShapePredicate>,
}

impl ObjPredicate {
    pub const COUNT: usize = 14;

    pub fn new(color: Option<Color>, shape: Option<ShapePredicate>) -> Option<Self> {
        if color.is_none() && shape.is_none() {
            None
        } else {
            Some(ObjPredicate { color, shape })
        }
    }

    pub const fn color_only(color: Color) -> Self {
        ObjPredicate { color: Some(color), shape: None }
    }

    pub const fn shape_only(shape: ShapePredicate) -> Self {
        ObjPredicate { color: None, shape: Some(shape) }
    }

    pub const fn colored(color: Color, shape: ShapePredicate) -> Self {
        ObjPredicate { color: Some(color), shape: Some(shape) }
    }

    pub fn color(&self) -> Option<Color> {
        self.color
    }

    pub fn shape(&self) -> Option<ShapePredicate> {
        self.shape
    }

    /// All 14 predicates in canonical order: colors, shapes, then colored shapes.
    pub fn all() -> [ObjPredicate; Self::COUNT] {
        std::array::from_fn(Self::from_ordinal)
    }

    pub fn from_ordinal(n: usize) -> ObjPredicate {
        const COLORS: [Color; 2] = [Color::Red, Color::Blue];
        match n {
            0..=1 => ObjPredicate::color_only(COLORS[n]),
            2..=5 => ObjPredicate::shape_only(ShapePredicate::ALL[n - 2]),
            6..=13 => ObjPredicate::colored(COLORS[(n - 6) / 4], ShapePredicate::ALL[(n - 6) % 4]),
            _ => panic!("object ordinal {n} out of range"),
        }
    }

    pub fn ordinal(&self) -> usize {
        let color = self.color.map(|c| c as usize);
        let shape = self.shape.map(|s| s as usize);
        match (color, shape) {
            (Some(c), None) => c,
            (None, Some(s)) => 2 + s,
            (Some(c), Some(s)) => 6 + 4 * c + s,
            (None, None) => unreachable!("object predicate without color or shape"),
        }
    }

    fn push_tokens(&self, out: &mut Vec<Token>) {
        match self.color {
            Some(Color::Red) => out.push(Token::Red),
            Some(Color::Blue) => out.push(Token::Blue),
            None => {}
        }
        if let Some(shape) = self.shape {
            shape.push_tokens(out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    Touching,
    SurroundedBy,
    AtTheRightOf,
    #[cfg(feature = "left-of-relation")]
    AtTheLeftOf,
}

impl Relation {
    #[cfg(not(feature = "left-of-relation"))]
    pub const ALL: &'static [Relation] =
        &[Relation::Touching, Relation::SurroundedBy, Relation::AtTheRightOf];
    #[cfg(feature = "left-of-relation")]
    pub const ALL: &'static [Relation] = &[
        Relation::Touching,
        Relation::SurroundedBy,
        Relation::AtTheRightOf,
        Relation::AtTheLeftOf,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    fn token(self) -> Token {
        match self {
            Relation::Touching => Token::Touching,
            Relation::SurroundedBy => Token::SurroundedBy,
            Relation::AtTheRightOf => Token::AtTheRightOf,
            #[cfg(feature = "left-of-relation")]
            Relation::AtTheLeftOf => Token::AtTheLeftOf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Connective {
    And,
    Or,
}

/// `QTY OBJ`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimpleProp {
    pub qty: Quantifier,
    pub obj: ObjPredicate,
}

impl SimpleProp {
    pub const COUNT: usize = 7 * ObjPredicate::COUNT;

    pub fn ordinal(&self) -> usize {
        self.qty.ordinal() * ObjPredicate::COUNT + self.obj.ordinal()
    }

    pub fn from_ordinal(n: usize) -> SimpleProp {
        SimpleProp {
            qty: Quantifier::ALL[n / ObjPredicate::COUNT],
            obj: ObjPredicate::from_ordinal(n % ObjPredicate::COUNT),
        }
    }

    fn push_tokens(&self, out: &mut Vec<Token>) {
        self.qty.push_tokens(out);
        self.obj.push_tokens(out);
    }
}

/// `QTY OBJ REL OBJ`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelProp {
    pub qty: Quantifier,
    pub subject: ObjPredicate,
    pub rel: Relation,
    pub object: ObjPredicate,
}

impl RelProp {
    pub fn count() -> usize {
        SimpleProp::COUNT * Relation::ALL.len() * ObjPredicate::COUNT
    }

    pub fn ordinal(&self) -> usize {
        let head = SimpleProp { qty: self.qty, obj: self.subject }.ordinal();
        (head * Relation::ALL.len() + self.rel.ordinal()) * ObjPredicate::COUNT
            + self.object.ordinal()
    }

    pub fn from_ordinal(n: usize) -> RelProp {
        let object = ObjPredicate::from_ordinal(n % ObjPredicate::COUNT);
        let rest = n / ObjPredicate::COUNT;
        let rel = Relation::ALL[rest % Relation::ALL.len()];
        let head = SimpleProp::from_ordinal(rest / Relation::ALL.len());
        RelProp { qty: head.qty, subject: head.obj, rel, object }
    }

    fn push_tokens(&self, out: &mut Vec<Token>) {
        self.qty.push_tokens(out);
        self.subject.push_tokens(out);
        out.push(self.rel.token());
        self.object.push_tokens(out);
    }
}

/// Parse tree of a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleAst {
    Simple(SimpleProp),
    Relational(RelProp),
    Conj { left: SimpleProp, op: Connective, right: SimpleProp },
}

/// Top-level production of a rule, with conjunctions split by connective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCategory {
    Simple,
    Relational,
    ConjAnd,
    ConjOr,
}

impl RuleCategory {
    pub const ALL: [RuleCategory; 4] =
        [RuleCategory::Simple, RuleCategory::Relational, RuleCategory::ConjAnd, RuleCategory::ConjOr];
}

impl RuleAst {
    pub fn tokens(&self) -> Vec<Token> {
        let mut out = Vec::with_capacity(12);
        match self {
            RuleAst::Simple(p) => p.push_tokens(&mut out),
            RuleAst::Relational(p) => p.push_tokens(&mut out),
            RuleAst::Conj { left, op, right } => {
                left.push_tokens(&mut out);
                out.push(match op {
                    Connective::And => Token::And,
                    Connective::Or => Token::Or,
                });
                right.push_tokens(&mut out);
            }
        }
        out
    }

    pub fn render(&self) -> String {
        let tokens = self.tokens();
        let mut text = String::with_capacity(tokens.len() * 8);
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(t.as_str());
        }
        text
    }

    pub fn category(&self) -> RuleCategory {
        match self {
            RuleAst::Simple(_) => RuleCategory::Simple,
            RuleAst::Relational(_) => RuleCategory::Relational,
            RuleAst::Conj { op: Connective::And, .. } => RuleCategory::ConjAnd,
            RuleAst::Conj { op: Connective::Or, .. } => RuleCategory::ConjOr,
        }
    }

    pub fn index(&self) -> RuleIndex {
        let counts = RuleCounts::current();
        let n = match self {
            RuleAst::Simple(p) => p.ordinal(),
            RuleAst::Relational(p) => counts.simple + p.ordinal(),
            RuleAst::Conj { left, op, right } => {
                let op = match op {
                    Connective::And => 0,
                    Connective::Or => 1,
                };
                counts.simple
                    + counts.relational
                    + (left.ordinal() * 2 + op) * SimpleProp::COUNT
                    + right.ordinal()
            }
        };
        RuleIndex(n as u32)
    }

    pub fn parse(text: &str) -> Result<RuleAst, SyntaxError> {
        parse(text)
    }
}

impl fmt::Display for RuleAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for RuleAst {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Position of a rule in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleIndex(u32);

impl RuleIndex {
    pub fn new(index: usize) -> Result<Self, EncodingError> {
        let limit = rule_count();
        if index < limit {
            Ok(RuleIndex(index as u32))
        } else {
            Err(EncodingError::IndexOutOfRange { index, limit })
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }

    pub fn rule(self) -> RuleAst {
        decode_rule(self.get())
    }
}

/// Rule counts per top-level production.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleCounts {
    pub simple: usize,
    pub relational: usize,
    pub conjunction: usize,
}

impl RuleCounts {
    pub fn current() -> RuleCounts {
        RuleCounts {
            simple: SimpleProp::COUNT,
            relational: RelProp::count(),
            conjunction: SimpleProp::COUNT * 2 * SimpleProp::COUNT,
        }
    }

    pub fn total(&self) -> usize {
        self.simple + self.relational + self.conjunction
    }
}

/// Total rule count reported in the original Odeen dataset description.
pub const REPORTED_RULE_COUNT: usize = 24_794;

pub fn rule_count() -> usize {
    RuleCounts::current().total()
}

fn decode_rule(n: usize) -> RuleAst {
    let counts = RuleCounts::current();
    if n < counts.simple {
        RuleAst::Simple(SimpleProp::from_ordinal(n))
    } else if n < counts.simple + counts.relational {
        RuleAst::Relational(RelProp::from_ordinal(n - counts.simple))
    } else {
        let n = n - counts.simple - counts.relational;
        let right = SimpleProp::from_ordinal(n % SimpleProp::COUNT);
        let rest = n / SimpleProp::COUNT;
        let op = if rest % 2 == 0 { Connective::And } else { Connective::Or };
        RuleAst::Conj { left: SimpleProp::from_ordinal(rest / 2), op, right }
    }
}

pub fn rule_index(ast: &RuleAst) -> RuleIndex {
    ast.index()
}

pub fn index_rule(index: usize) -> Result<RuleAst, EncodingError> {
    RuleIndex::new(index).map(RuleIndex::rule)
}

/// Every rule exactly once, in canonical order.
pub fn enumerate_rules() -> impl ExactSizeIterator<Item = RuleAst> + Clone {
    (0..rule_count()).map(decode_rule)
}

/// A uniformly random rule.
pub fn sample_rule<R: Rng + ?Sized>(rng: &mut R) -> RuleAst {
    decode_rule(rng.gen_range(0..rule_count()))
}

/// Terminals of the rule language, plus a catch-all for anything else.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    AtLeast,
    Exactly,
    AtMost,
    Zero,
    One,
    Two,
    Red,
    Blue,
    Pyramid,
    PointingUp,
    PointingDown,
    Block,
    Touching,
    SurroundedBy,
    AtTheRightOf,
    #[cfg(feature = "left-of-relation")]
    AtTheLeftOf,
    And,
    Or,
    Unknown(String),
}

impl Token {
    /// Every terminal of the grammar.
    pub fn terminals() -> Vec<Token> {
        let mut all = vec![
            Token::AtLeast,
            Token::Exactly,
            Token::AtMost,
            Token::Zero,
            Token::One,
            Token::Two,
            Token::Red,
            Token::Blue,
            Token::Pyramid,
            Token::PointingUp,
            Token::PointingDown,
            Token::Block,
        ];
        all.extend(Relation::ALL.iter().map(|r| r.token()));
        all.extend([Token::And, Token::Or]);
        all
    }

    pub fn from_word(word: &str) -> Token {
        match word {
            "at_least" => Token::AtLeast,
            "exactly" => Token::Exactly,
            "at_most" => Token::AtMost,
            "zero" => Token::Zero,
            "1" => Token::One,
            "2" => Token::Two,
            "red" => Token::Red,
            "blue" => Token::Blue,
            "pyramid" => Token::Pyramid,
            "pointing_up" => Token::PointingUp,
            "pointing_down" => Token::PointingDown,
            "block" => Token::Block,
            "touching" => Token::Touching,
            "surrounded_by" => Token::SurroundedBy,
            "at_the_right_of" => Token::AtTheRightOf,
            #[cfg(feature = "left-of-relation")]
            "at_the_left_of" => Token::AtTheLeftOf,
            "and" => Token::And,
            "or" => Token::Or,
            other => Token::Unknown(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Token::AtLeast => "at_least",
            Token::Exactly => "exactly",
            Token::AtMost => "at_most",
            Token::Zero => "zero",
            Token::One => "1",
            Token::Two => "2",
            Token::Red => "red",
            Token::Blue => "blue",
            Token::Pyramid => "pyramid",
            Token::PointingUp => "pointing_up",
            Token::PointingDown => "pointing_down",
            Token::Block => "block",
            Token::Touching => "touching",
            Token::SurroundedBy => "surrounded_by",
            Token::AtTheRightOf => "at_the_right_of",
            #[cfg(feature = "left-of-relation")]
            Token::AtTheLeftOf => "at_the_left_of",
            Token::And => "and",
            Token::Or => "or",
            Token::Unknown(word) => word,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Token::Unknown(_))
    }
}

/// Splits on single spaces. Unknown words become [`Token::Unknown`].
pub fn tokenize(text: &str) -> Vec<Token> {
    if text.is_empty() {
        return Vec::new();
    }
    text.split(' ').map(Token::from_word).collect()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error(&self, expected: &'static str) -> SyntaxError {
        SyntaxError {
            position: self.pos,
            found: self.peek().map(|t| t.as_str().to_string()),
            expected,
        }
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn num(&mut self) -> Result<Num, SyntaxError> {
        match self.peek() {
            Some(Token::One) => {
                self.pos += 1;
                Ok(Num::One)
            }
            Some(Token::Two) => {
                self.pos += 1;
                Ok(Num::Two)
            }
            _ => Err(self.error("1 or 2")),
        }
    }

    fn quantifier(&mut self) -> Result<Quantifier, SyntaxError> {
        let qty = match self.peek() {
            Some(Token::AtLeast) => {
                self.pos += 1;
                Quantifier::AtLeast(self.num()?)
            }
            Some(Token::Exactly) => {
                self.pos += 1;
                Quantifier::Exactly(self.num()?)
            }
            Some(Token::AtMost) => {
                self.pos += 1;
                Quantifier::AtMost(self.num()?)
            }
            Some(Token::Zero) => {
                self.pos += 1;
                Quantifier::Zero
            }
            _ => return Err(self.error("a quantifier (at_least, exactly, at_most, zero)")),
        };
        Ok(qty)
    }

    fn shape(&mut self) -> Option<ShapePredicate> {
        match self.peek() {
            Some(Token::Block) => {
                self.pos += 1;
                Some(ShapePredicate::Block)
            }
            Some(Token::Pyramid) => {
                self.pos += 1;
                match self.peek() {
                    Some(Token::PointingUp) => {
                        self.pos += 1;
                        Some(ShapePredicate::PyramidUp)
                    }
                    Some(Token::PointingDown) => {
                        self.pos += 1;
                        Some(ShapePredicate::PyramidDown)
                    }
                    _ => Some(ShapePredicate::Pyramid),
                }
            }
            _ => None,
        }
    }

    fn object(&mut self) -> Result<ObjPredicate, SyntaxError> {
        let color = match self.peek() {
            Some(Token::Red) => Some(Color::Red),
            Some(Token::Blue) => Some(Color::Blue),
            _ => None,
        };
        if color.is_some() {
            self.pos += 1;
        }
        let shape = self.shape();
        ObjPredicate::new(color, shape)
            .ok_or_else(|| self.error("an object (red, blue, pyramid, block)"))
    }

    fn relation(&mut self) -> Option<Relation> {
        let rel = Relation::ALL.iter().copied().find(|r| Some(&r.token()) == self.peek())?;
        self.pos += 1;
        Some(rel)
    }

    fn end(&self) -> Result<(), SyntaxError> {
        match self.peek() {
            None => Ok(()),
            Some(_) => Err(self.error("end of rule")),
        }
    }

    fn rule(&mut self) -> Result<RuleAst, SyntaxError> {
        let qty = self.quantifier()?;
        let obj = self.object()?;
        let head = SimpleProp { qty, obj };
        if let Some(rel) = self.relation() {
            let object = self.object()?;
            self.end()?;
            return Ok(RuleAst::Relational(RelProp { qty, subject: obj, rel, object }));
        }
        let op = match self.peek() {
            None => return Ok(RuleAst::Simple(head)),
            Some(Token::And) => Connective::And,
            Some(Token::Or) => Connective::Or,
            Some(_) => return Err(self.error("a relation, a connective, or end of rule")),
        };
        self.bump();
        let qty = self.quantifier()?;
        let obj = self.object()?;
        self.end()?;
        Ok(RuleAst::Conj { left: head, op, right: SimpleProp { qty, obj } })
    }
}

/// Parses canonical rule text.
pub fn parse(text: &str) -> Result<RuleAst, SyntaxError> {
    let mut parser = Parser { tokens: tokenize(text), pos: 0 };
    parser.rule()
}

pub fn render(ast: &RuleAst) -> String {
    ast.render()
}
