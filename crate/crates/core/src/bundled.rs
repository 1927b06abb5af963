//! Generator files shipped with the crate.

use crate::generator::{parse_generator, GeneratorFile};

/// `(name, file contents)` for every bundled generator.
pub const BUNDLED: &[(&str, &str)] = &[
    ("appendix", include_str!("../../../generators/appendix.toml")),
    ("appendix_subtree", include_str!("../../../generators/appendix_subtree.toml")),
    ("sqrt2", include_str!("../../../generators/sqrt2.toml")),
    ("binary", include_str!("../../../generators/binary.toml")),
    ("half_line", include_str!("../../../generators/half_line.toml")),
    ("palindrome_critical", include_str!("../../../generators/palindrome_critical.toml")),
];

/// Parses the bundled generator called `name`.
pub fn bundled(name: &str) -> Option<GeneratorFile> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_generator(text).expect("bundled generator parses"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_parse() {
        for (name, _) in BUNDLED {
            assert!(bundled(name).is_some(), "{name}");
        }
        assert!(bundled("nope").is_none());
    }
}
