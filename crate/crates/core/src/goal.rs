//! Coverage goals.
//!
//! ```text
//! goal     ::= sentence | aggregate
//! sentence ::= clause ( ";" clause )*
//! clause   ::= word ( "|" word )*  |  "(" word ( "|" word )* ")"
//! word     ::= "<" state ( "," state )* ">"
//! aggregate::= "^" k ">=" N
//! ```
//!
//! Whitespace is insignificant. All words of one goal must have the same
//! length.

use std::fmt;

use crate::error::{Error, Result};

/// A connected sequence of states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word(Vec<String>);

impl Word {
    pub fn new<I, S>(states: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Word(states.into_iter().map(Into::into).collect())
    }

    pub fn states(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A disjunction of words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause(Vec<Word>);

impl Clause {
    /// Duplicate words are collapsed, keeping first occurrences.
    pub fn new(words: Vec<Word>) -> Self {
        let mut uniq: Vec<Word> = Vec::with_capacity(words.len());
        for w in words {
            if !uniq.contains(&w) {
                uniq.push(w);
            }
        }
        Clause(uniq)
    }

    pub fn words(&self) -> &[Word] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Goal {
    /// Clauses to be covered in order (consecutive clauses may overlap).
    Sentence(Vec<Clause>),
    /// Cover at least `n` distinct words of length `k`.
    Aggregate { k: usize, n: usize },
}

impl Goal {
    pub fn parse(text: &str) -> Result<Self> {
        Parser::new(text).goal()
    }

    /// Builds a sentence goal, checking the structural invariants.
    pub fn sentence(clauses: Vec<Clause>) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::GoalSyntax {
                offset: 0,
                message: "empty sentence".into(),
            });
        }
        let mut expected = None;
        for w in clauses.iter().flat_map(|c| c.words()) {
            if w.is_empty() {
                return Err(Error::GoalSyntax {
                    offset: 0,
                    message: "empty word".into(),
                });
            }
            match expected {
                None => expected = Some(w.len()),
                Some(k) if k != w.len() => {
                    return Err(Error::MixedWordLength {
                        expected: k,
                        found: w.len(),
                    })
                }
                Some(_) => {}
            }
        }
        if clauses.iter().any(|c| c.words().is_empty()) {
            return Err(Error::GoalSyntax {
                offset: 0,
                message: "empty clause".into(),
            });
        }
        Ok(Goal::Sentence(clauses))
    }

    pub fn aggregate(k: usize, n: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidAggregate("k must be at least 1".into()));
        }
        Ok(Goal::Aggregate { k, n })
    }

    /// The uniform word length k.
    pub fn word_length(&self) -> usize {
        match self {
            Goal::Aggregate { k, .. } => *k,
            Goal::Sentence(clauses) => clauses[0].words()[0].len(),
        }
    }

    pub fn clauses(&self) -> Option<&[Clause]> {
        match self {
            Goal::Sentence(c) => Some(c),
            Goal::Aggregate { .. } => None,
        }
    }

    pub fn is_aggregate(&self) -> bool {
        matches!(self, Goal::Aggregate { .. })
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0.join(","))
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        f.write_str("(")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Aggregate { k, n } => write!(f, "^{k}>={n}"),
            Goal::Sentence(clauses) => {
                for (i, c) in clauses.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ; ")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::str::FromStr for Goal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Goal::parse(s)
    }
}

const PUNCT: &[char] = &['<', '>', ',', '|', ';', '(', ')', '^', '=', '#'];

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, pos: 0 }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::GoalSyntax {
            offset: self.pos,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn goal(&mut self) -> Result<Goal> {
        let goal = match self.peek() {
            None => return self.err("empty goal"),
            Some('^') => self.aggregate()?,
            Some(_) => self.sentence()?,
        };
        if self.peek().is_some() {
            return self.err("trailing input");
        }
        Ok(goal)
    }

    fn aggregate(&mut self) -> Result<Goal> {
        self.expect('^')?;
        let k = self.integer()?;
        self.skip_ws();
        if self.src[self.pos..].starts_with(">=") {
            self.pos += 2;
        } else if self.src[self.pos..].starts_with('≥') {
            self.pos += '≥'.len_utf8();
        } else {
            return self.err("expected `>=`");
        }
        let n = self.integer()?;
        if k < 1 {
            return Err(Error::InvalidAggregate("k must be at least 1".into()));
        }
        if n < 0 {
            return Err(Error::InvalidAggregate("N must be non-negative".into()));
        }
        Ok(Goal::Aggregate {
            k: k as usize,
            n: n as usize,
        })
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .char_indices()
            .take_while(|&(i, c)| c.is_ascii_digit() || (i == 0 && (c == '-' || c == '+')))
            .map(|(i, c)| i + c.len_utf8())
            .last()
            .unwrap_or(0);
        match rest[..len].parse::<i64>() {
            Ok(v) => {
                self.pos += len;
                Ok(v)
            }
            Err(_) => self.err("expected an integer"),
        }
    }

    fn sentence(&mut self) -> Result<Goal> {
        let mut clauses = vec![self.clause()?];
        while self.eat(';') {
            clauses.push(self.clause()?);
        }
        Goal::sentence(clauses)
    }

    fn clause(&mut self) -> Result<Clause> {
        let parenthesized = self.eat('(');
        let mut words = vec![self.word()?];
        while self.eat('|') {
            words.push(self.word()?);
        }
        if parenthesized {
            self.expect(')')?;
        }
        Ok(Clause::new(words))
    }

    fn word(&mut self) -> Result<Word> {
        self.expect('<')?;
        let mut states = vec![self.ident()?];
        while self.eat(',') {
            states.push(self.ident()?);
        }
        self.expect('>')?;
        Ok(Word(states))
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || PUNCT.contains(&c))
            .unwrap_or(rest.len());
        if len == 0 {
            return self.err("expected a state id");
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_clause_sentence() {
        let g = Goal::parse("(<2>|<3>) ; <1>").unwrap();
        let clauses = g.clauses().unwrap();
        assert_eq!(clauses.len(), 2);
        assert_eq!(clauses[0].words().len(), 2);
        assert_eq!(g.render(), "(<2>|<3>) ; <1>");
        assert_eq!(Goal::parse("<2>|<3>;<1>").unwrap(), g);
    }

    #[test]
    fn aggregate() {
        assert_eq!(
            Goal::parse("^1>=4").unwrap(),
            Goal::Aggregate { k: 1, n: 4 }
        );
        assert_eq!(Goal::parse(" ^ 3 >= 8 ").unwrap().word_length(), 3);
        assert_eq!(Goal::parse("^1≥0").unwrap(), Goal::Aggregate { k: 1, n: 0 });
        assert_eq!(Goal::Aggregate { k: 1, n: 4 }.render(), "^1>=4");
        assert!(matches!(
            Goal::parse("^0>=1"),
            Err(Error::InvalidAggregate(_))
        ));
        assert!(matches!(
            Goal::parse("^1>=-2"),
            Err(Error::InvalidAggregate(_))
        ));
        assert!(matches!(Goal::parse("^1>4"), Err(Error::GoalSyntax { .. })));
    }

    #[test]
    fn mixed_word_length() {
        assert_eq!(
            Goal::parse("<0,2> ; <1,0,1>").unwrap_err(),
            Error::MixedWordLength {
                expected: 2,
                found: 3
            }
        );
    }

    #[test]
    fn word_lengths() {
        assert_eq!(Goal::parse("<0,2,0> ; <4,1,5>").unwrap().word_length(), 3);
        assert_eq!(Goal::parse("<1>").unwrap().word_length(), 1);
        assert_eq!(Goal::parse("<1>").unwrap().render(), "<1>");
    }

    #[test]
    fn rejects_empty_parts() {
        for bad in [
            "", "  ", "<>", "()", "<1>;", "<1>|", "(<1>", "<1,>", "<1> <2>", "<#>",
        ] {
            assert!(Goal::parse(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn duplicate_words_collapse() {
        let g = Goal::parse("(<1>|<2>|<1>)").unwrap();
        assert_eq!(g.clauses().unwrap()[0].words().len(), 2);
    }

    #[test]
    fn named_states() {
        let g = Goal::parse("<2> ; <t0>").unwrap();
        assert_eq!(g.clauses().unwrap()[1].words()[0].states(), ["t0"]);
    }

    fn arb_goal() -> impl Strategy<Value = Goal> {
        let state = prop::sample::select(vec!["0", "1", "2", "t0", "s_1", "x"]);
        let aggregate = (1usize..5, 0usize..20).prop_map(|(k, n)| Goal::Aggregate { k, n });
        let sentence = (1usize..4).prop_flat_map(move |k| {
            let word = prop::collection::vec(state.clone(), k).prop_map(Word::new);
            let clause = prop::collection::vec(word, 1..4).prop_map(Clause::new);
            prop::collection::vec(clause, 1..4).prop_map(Goal::Sentence)
        });
        prop_oneof![aggregate, sentence]
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(g in arb_goal()) {
            prop_assert_eq!(Goal::parse(&g.render()).unwrap(), g);
        }
    }
}
