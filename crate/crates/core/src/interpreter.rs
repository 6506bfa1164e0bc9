//! The hard-coded interpreter: truth of a rule on a structure.
//!
//! Relation semantics:
//! * `touching`: a distinct matching piece sits in an adjacent cell.
//! * `at_the_right_of`: a matching piece sits anywhere to the left
//!   ([`RightOf::Immediate`] restricts it to the adjacent cell).
//! * `surrounded_by`: both neighbouring cells hold matching pieces, so the
//!   end cells can never be surrounded.
//!
//! Relational quantifiers count subject pieces that have at least one witness.

use crate::bits::BitRow;
use crate::grammar::{Connective, ObjPredicate, Quantifier, Relation, RuleAst, ShapePredicate};
use crate::universe::{enumerate_universe, Color, PieceShape, Structure, STRUCTURE_LEN};

/// Truth value of a rule on a structure: `true` is a green tag.
pub type Label = bool;

/// A non-empty cell seen as a piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Piece {
    pub position: usize,
    pub color: Color,
    pub shape: PieceShape,
}

/// Iterates the pieces of `s` from left to right.
pub fn pieces(s: &Structure) -> impl Iterator<Item = Piece> + '_ {
    s.cells().iter().enumerate().filter_map(|(position, cell)| {
        Some(Piece { position, color: cell.color()?, shape: cell.shape()? })
    })
}

fn piece_at(s: &Structure, position: usize) -> Option<Piece> {
    let cell = s.cell(position);
    Some(Piece { position, color: cell.color()?, shape: cell.shape()? })
}

pub fn matches(piece: &Piece, obj: &ObjPredicate) -> bool {
    let color_ok = obj.color().is_none_or(|c| c == piece.color);
    let shape_ok = obj.shape().is_none_or(|shape| match shape {
        ShapePredicate::PyramidUp => piece.shape == PieceShape::PyramidUp,
        ShapePredicate::PyramidDown => piece.shape == PieceShape::PyramidDown,
        ShapePredicate::Pyramid => piece.shape != PieceShape::Square,
        ShapePredicate::Block => piece.shape == PieceShape::Square,
    });
    color_ok && shape_ok
}

/// How `at_the_right_of` picks its witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RightOf {
    /// Any matching piece strictly to the left of the subject.
    #[default]
    Anywhere,
    /// Only a matching piece in the cell immediately to the left.
    Immediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Semantics {
    pub right_of: RightOf,
}

/// Evaluates rules under a fixed [`Semantics`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Interpreter {
    semantics: Semantics,
}

impl Interpreter {
    pub fn new(semantics: Semantics) -> Self {
        Interpreter { semantics }
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    fn has_witness(&self, s: &Structure, p: &Piece, rel: Relation, obj: &ObjPredicate) -> bool {
        let at = |pos: Option<usize>| {
            pos.filter(|&q| q < STRUCTURE_LEN)
                .and_then(|q| piece_at(s, q))
                .is_some_and(|q| matches(&q, obj))
        };
        let left = p.position.checked_sub(1);
        let right = Some(p.position + 1);
        match rel {
            Relation::Touching => at(left) || at(right),
            Relation::SurroundedBy => at(left) && at(right),
            Relation::AtTheRightOf => match self.semantics.right_of {
                RightOf::Anywhere => pieces(s).any(|q| q.position < p.position && matches(&q, obj)),
                RightOf::Immediate => at(left),
            },
            #[cfg(feature = "left-of-relation")]
            Relation::AtTheLeftOf => match self.semantics.right_of {
                RightOf::Anywhere => pieces(s).any(|q| q.position > p.position && matches(&q, obj)),
                RightOf::Immediate => at(right),
            },
        }
    }

    pub fn count_rel(
        &self,
        s: &Structure,
        subject: &ObjPredicate,
        rel: Relation,
        object: &ObjPredicate,
    ) -> usize {
        pieces(s)
            .filter(|p| matches(p, subject) && self.has_witness(s, p, rel, object))
            .count()
    }

    pub fn evaluate(&self, rule: &RuleAst, s: &Structure) -> Label {
        match rule {
            RuleAst::Simple(p) => apply_qty(p.qty, count_simple(s, &p.obj)),
            RuleAst::Relational(p) => {
                apply_qty(p.qty, self.count_rel(s, &p.subject, p.rel, &p.object))
            }
            RuleAst::Conj { left, op, right } => {
                let l = apply_qty(left.qty, count_simple(s, &left.obj));
                let r = apply_qty(right.qty, count_simple(s, &right.obj));
                match op {
                    Connective::And => l && r,
                    Connective::Or => l || r,
                }
            }
        }
    }

    /// Truth row by evaluating every structure directly.
    pub fn evaluate_row_naive(&self, rule: &RuleAst) -> BitRow {
        let mut row = BitRow::zeros();
        for (i, s) in enumerate_universe().enumerate() {
            if self.evaluate(rule, &s) {
                row.set(i, true);
            }
        }
        row
    }

    /// Truth row, with conjunctions combined from their two proposition rows.
    pub fn evaluate_row(&self, rule: &RuleAst) -> BitRow {
        match rule {
            RuleAst::Conj { left, op, right } => {
                let l = self.evaluate_row_naive(&RuleAst::Simple(*left));
                let r = self.evaluate_row_naive(&RuleAst::Simple(*right));
                match op {
                    Connective::And => l.and(&r),
                    Connective::Or => l.or(&r),
                }
            }
            atomic => self.evaluate_row_naive(atomic),
        }
    }
}

pub fn count_simple(s: &Structure, obj: &ObjPredicate) -> usize {
    pieces(s).filter(|p| matches(p, obj)).count()
}

pub fn count_rel(s: &Structure, subject: &ObjPredicate, rel: Relation, object: &ObjPredicate) -> usize {
    Interpreter::default().count_rel(s, subject, rel, object)
}

pub fn apply_qty(qty: Quantifier, count: usize) -> bool {
    qty.accepts(count)
}

/// Evaluates under the default semantics.
pub fn evaluate(rule: &RuleAst, s: &Structure) -> Label {
    Interpreter::default().evaluate(rule, s)
}

pub fn evaluate_row(rule: &RuleAst) -> BitRow {
    Interpreter::default().evaluate_row(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{parse, Num};
    use crate::universe::parse_structure;

    fn obj(text: &str) -> ObjPredicate {
        match parse(&format!("zero {text}")).unwrap() {
            RuleAst::Simple(p) => p.obj,
            other => panic!("{other:?}"),
        }
    }

    fn s(text: &str) -> Structure {
        parse_structure(text).unwrap()
    }

    fn eval(rule: &str, structure: &str) -> bool {
        evaluate(&parse(rule).unwrap(), &s(structure))
    }

    #[test]
    fn object_matching() {
        let red_square = Piece { position: 0, color: Color::Red, shape: PieceShape::Square };
        let blue_up = Piece { position: 0, color: Color::Blue, shape: PieceShape::PyramidUp };
        let blue_square = Piece { position: 0, color: Color::Blue, shape: PieceShape::Square };
        assert!(matches(&red_square, &obj("red")));
        assert!(matches(&blue_up, &obj("pyramid")));
        assert!(!matches(&blue_up, &obj("pyramid pointing_down")));
        assert!(!matches(&blue_square, &obj("red block")));
        assert!(matches(&blue_square, &obj("block")));
    }

    #[test]
    fn simple_counts() {
        for o in ObjPredicate::all() {
            assert_eq!(count_simple(&Structure::EMPTY, &o), 0);
        }
        assert_eq!(count_simple(&s("UuU..."), &obj("pyramid pointing_up")), 3);
        assert_eq!(count_simple(&s("UuU..."), &obj("red pyramid pointing_up")), 2);
        assert_eq!(count_simple(&s("QQQQQQ"), &obj("red")), 6);
    }

    #[test]
    fn relational_counts() {
        assert_eq!(count_rel(&s("Qq...."), &obj("red block"), Relation::Touching, &obj("blue block")), 1);
        assert_eq!(count_rel(&s("Q.q..."), &obj("red block"), Relation::Touching, &obj("blue block")), 0);
        assert_eq!(
            count_rel(
                &s(".UdU.."),
                &obj("pyramid pointing_down"),
                Relation::SurroundedBy,
                &obj("pyramid pointing_up")
            ),
            1
        );
        assert_eq!(count_rel(&s("q....Q"), &obj("red"), Relation::AtTheRightOf, &obj("blue")), 1);
        assert_eq!(count_rel(&s("q....Q"), &obj("blue"), Relation::AtTheRightOf, &obj("red")), 0);
        // subjects are counted once however many witnesses they have
        assert_eq!(count_rel(&s("qQq..."), &obj("red"), Relation::Touching, &obj("blue")), 1);
        assert_eq!(count_rel(&s("QqQ..."), &obj("red"), Relation::Touching, &obj("blue")), 2);
        // a piece never witnesses itself
        assert_eq!(count_rel(&s("Q....."), &obj("red"), Relation::Touching, &obj("red")), 0);
        assert_eq!(count_rel(&s("Q....."), &obj("red"), Relation::AtTheRightOf, &obj("red")), 0);
    }

    #[test]
    fn surrounded_needs_both_neighbours() {
        assert_eq!(count_rel(&s("qQ...."), &obj("red"), Relation::SurroundedBy, &obj("blue")), 0);
        assert_eq!(count_rel(&s("Qq...."), &obj("red"), Relation::SurroundedBy, &obj("blue")), 0);
        assert_eq!(count_rel(&s("....qQ"), &obj("red"), Relation::SurroundedBy, &obj("blue")), 0);
        assert_eq!(count_rel(&s("qQq..."), &obj("red"), Relation::SurroundedBy, &obj("blue")), 1);
        assert_eq!(count_rel(&s("qQ.q.."), &obj("red"), Relation::SurroundedBy, &obj("blue")), 0);
    }

    #[test]
    fn immediate_right_of_mode() {
        let immediate = Interpreter::new(Semantics { right_of: RightOf::Immediate });
        let structure = s("q.Q...");
        assert_eq!(immediate.count_rel(&structure, &obj("red"), Relation::AtTheRightOf, &obj("blue")), 0);
        assert_eq!(count_rel(&structure, &obj("red"), Relation::AtTheRightOf, &obj("blue")), 1);
        assert_eq!(immediate.count_rel(&s("qQ...."), &obj("red"), Relation::AtTheRightOf, &obj("blue")), 1);
    }

    #[test]
    fn quantifiers() {
        assert!(apply_qty(Quantifier::AtMost(Num::One), 0));
        assert!(apply_qty(Quantifier::Exactly(Num::Two), 2));
        assert!(!apply_qty(Quantifier::Exactly(Num::Two), 3));
        assert!(!apply_qty(Quantifier::Zero, 1));
        assert!(apply_qty(Quantifier::AtLeast(Num::Two), 6));
        assert!(!apply_qty(Quantifier::AtLeast(Num::One), 0));
    }

    #[test]
    fn evaluate_examples() {
        assert!(eval("zero red", "......"));
        assert!(eval("exactly 1 pyramid pointing_up", ".u...."));
        assert!(!eval("exactly 1 pyramid pointing_up", ".uU..."));
        assert!(eval("at_least 2 pyramid pointing_down", "dD...."));
        assert!(eval("exactly 1 blue pyramid touching blue block", "uq...."));
        assert!(!eval("exactly 1 blue pyramid touching blue block", "uqu..."));
        assert!(eval("at_least 1 red and zero blue", "Q....."));
        assert!(!eval("at_least 1 red and zero blue", "Q....q"));
        assert!(eval("at_least 1 red or zero blue", "Q....q"));
    }

    #[test]
    fn board_04_paraphrase_agrees_everywhere() {
        let golden = parse("at_most 1 blue pyramid pointing_up").unwrap();
        let guess = parse("zero blue or at_most 1 blue pyramid pointing_up").unwrap();
        for x in enumerate_universe() {
            assert_eq!(evaluate(&golden, &x), evaluate(&guess, &x), "{x}");
        }
    }

    #[test]
    fn contradiction_has_empty_row() {
        let row = evaluate_row(&parse("at_least 2 red and zero red").unwrap());
        assert_eq!(row.count_ones(), 0);
        let row = evaluate_row(&parse("zero red").unwrap());
        assert!(row.get(0));
    }

    #[test]
    fn edge_pieces_are_never_surrounded() {
        for x in enumerate_universe() {
            for subject in ObjPredicate::all() {
                let interior = (1..STRUCTURE_LEN - 1)
                    .filter_map(|p| piece_at(&x, p))
                    .filter(|p| matches(p, &subject))
                    .count();
                for object in [obj("red"), obj("blue"), obj("pyramid")] {
                    assert!(count_rel(&x, &subject, Relation::SurroundedBy, &object) <= interior);
                }
            }
        }
    }
}
