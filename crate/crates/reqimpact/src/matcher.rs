//! Regex-driven requirement key extraction.

use regex::Regex;
use reqimpact_core::linker::KeyMatcher;
use reqimpact_core::LinkConfig;

/// Matches the configured template against commit messages. Leading and
/// trailing `.*` are dropped so every occurrence is found, not only the
/// first; the first capture group, when present, is the issue number.
#[derive(Debug, Clone)]
pub struct RegexKeyMatcher {
    regex: Regex,
    project_key: String,
}

impl RegexKeyMatcher {
    pub fn new(config: &LinkConfig) -> Result<Self, regex::Error> {
        let pattern = config.instantiated_pattern();
        let mut core = pattern.as_str();
        while let Some(rest) = core.strip_prefix(".*") {
            core = rest;
        }
        while let Some(rest) = core.strip_suffix(".*") {
            core = rest;
        }
        Ok(RegexKeyMatcher {
            regex: Regex::new(core)?,
            project_key: config.project_key.clone(),
        })
    }
}

impl KeyMatcher for RegexKeyMatcher {
    fn requirement_keys(&self, message: &str) -> Vec<String> {
        self.regex
            .captures_iter(message)
            .map(|caps| match caps.get(1) {
                Some(num) => format!("{}-{}", self.project_key, num.as_str()),
                None => caps[0].to_string(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collects_every_match() {
        let m = RegexKeyMatcher::new(&LinkConfig::new("TIKA")).unwrap();
        assert_eq!(
            m.requirement_keys("TIKA-11: parser\nalso fixes TIKA-2 and tika-3"),
            ["TIKA-11", "TIKA-2"]
        );
        assert!(m.requirement_keys("no key here").is_empty());
    }

    #[test]
    fn template_without_group_uses_whole_match() {
        let mut cfg = LinkConfig::new("ACC");
        cfg.regex_template = "\\[{KEY}-[0-9]+\\]".into();
        let m = RegexKeyMatcher::new(&cfg).unwrap();
        assert_eq!(m.requirement_keys("[ACC-4] x"), ["[ACC-4]"]);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(1000))]
        #[test]
        fn default_template_agrees_with_core_scanner(
            key in "[A-Z]{1,4}",
            message in "([A-Z]{1,4}|-|[0-9]{1,3}| |\\n|é|x){0,24}",
        ) {
            let regex = RegexKeyMatcher::new(&LinkConfig::new(&key)).unwrap();
            let scanner = reqimpact_core::linker::KeyScanner::new(&key);
            proptest::prop_assert_eq!(regex.requirement_keys(&message), scanner.requirement_keys(&message));
        }
    }
}
