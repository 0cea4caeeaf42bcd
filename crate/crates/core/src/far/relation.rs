use crate::spec::Atom;

/// An equivalence on atoms that FAR uses to find shared preconditions.
///
/// Implementations must only relate atoms that have equal truth values in every pair of states;
/// otherwise factoring out a "common" atom changes the meaning of the specification.
pub trait AtomEquivalence: Sync {
    fn name(&self) -> &str;

    fn equivalent(&self, a: &Atom, b: &Atom) -> bool;

    /// A key with `key(a) == key(b)` exactly when `a` and `b` are equivalent, if one is cheap to
    /// compute. Lets weight computation hash instead of comparing every pair.
    fn class_key(&self, _a: &Atom) -> Option<String> {
        None
    }

    /// Whether `equivalent` is symmetric. Asymmetric relations make the similarity graph directed
    /// and switch component detection to strongly connected components.
    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Equality of canonical text.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lexical;

impl AtomEquivalence for Lexical {
    fn name(&self) -> &str {
        "lexical"
    }

    fn equivalent(&self, a: &Atom, b: &Atom) -> bool {
        a.text() == b.text()
    }

    fn class_key(&self, a: &Atom) -> Option<String> {
        Some(a.text().to_string())
    }
}
