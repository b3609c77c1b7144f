use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_CATALOG: &str = include_str!("../../data/default_catalog.toml");

pub(crate) const PLACEHOLDER: &str = "{}";

/// Text transform applied to field descriptors ("question", "answer", ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorTransform {
    Title,
    Upper,
    Lower,
    Identity,
}

impl DescriptorTransform {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Title => "title",
            Self::Upper => "upper",
            Self::Lower => "lower",
            Self::Identity => "identity",
        }
    }

    fn parse(raw: &str) -> Option<Self> {
        match raw.trim() {
            "title" | "lambda x: x.title()" => Some(Self::Title),
            "upper" | "lambda x: x.upper()" => Some(Self::Upper),
            "lower" | "lambda x: x.lower()" => Some(Self::Lower),
            "identity" | "lambda x: x" => Some(Self::Identity),
            _ => None,
        }
    }

    pub fn apply(self, text: &str) -> String {
        match self {
            Self::Title => title_case(text),
            Self::Upper => text.to_uppercase(),
            Self::Lower => text.to_lowercase(),
            Self::Identity => text.to_string(),
        }
    }
}

/// Python `str.title()`: a cased character following an uncased one is
/// uppercased, every other cased character is lowercased.
fn title_case(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut previous_cased = false;
    for ch in text.chars() {
        let cased = ch.is_lowercase() || ch.is_uppercase();
        if cased {
            if previous_cased {
                out.extend(ch.to_lowercase());
            } else {
                out.extend(ch.to_uppercase());
            }
        } else {
            out.push(ch);
        }
        previous_cased = cased;
    }
    out
}

/// Enumeration alphabet for answer options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStyle {
    Arabic,
    LatinUpper,
    LatinLower,
    RomanUpper,
    RomanLower,
}

impl ItemStyle {
    pub fn keyword(self) -> &'static str {
        match self {
            Self::Arabic => "arabic",
            Self::LatinUpper => "latin_upper",
            Self::LatinLower => "latin_lower",
            Self::RomanUpper => "roman_upper",
            Self::RomanLower => "roman_lower",
        }
    }

    fn parse(raw: &str) -> Option<Self> {
        match raw.trim() {
            "arabic" | "1, 2, ..." | "1, 2, 3, ..." => Some(Self::Arabic),
            "latin_upper" | "A, B, ..." | "A, B, C, ..." => Some(Self::LatinUpper),
            "latin_lower" | "a, b, ..." | "a, b, c, ..." => Some(Self::LatinLower),
            "roman_upper" | "I, II, ..." | "I, II, III, ..." => Some(Self::RomanUpper),
            "roman_lower" | "i, ii, ..." | "i, ii, iii, ..." => Some(Self::RomanLower),
            _ => None,
        }
    }

    /// Largest number of items the alphabet can enumerate.
    pub fn capacity(self) -> usize {
        match self {
            Self::Arabic => usize::MAX,
            Self::LatinUpper | Self::LatinLower => 26,
            Self::RomanUpper | Self::RomanLower => 3999,
        }
    }

    /// Label of the zero-based `index`-th item, or `None` past capacity.
    pub fn item(self, index: usize) -> Option<String> {
        if index >= self.capacity() {
            return None;
        }
        let label = match self {
            Self::Arabic => (index + 1).to_string(),
            Self::LatinUpper => char::from(b'A' + index as u8).to_string(),
            Self::LatinLower => char::from(b'a' + index as u8).to_string(),
            Self::RomanUpper => roman(index + 1),
            Self::RomanLower => roman(index + 1).to_lowercase(),
        };
        Some(label)
    }
}

fn roman(mut n: usize) -> String {
    const TABLE: [(usize, &str); 13] = [
        (1000, "M"),
        (900, "CM"),
        (500, "D"),
        (400, "CD"),
        (100, "C"),
        (90, "XC"),
        (50, "L"),
        (40, "XL"),
        (10, "X"),
        (9, "IX"),
        (5, "V"),
        (4, "IV"),
        (1, "I"),
    ];
    let mut out = String::new();
    for (value, numeral) in TABLE {
        while n >= value {
            out.push_str(numeral);
            n -= value;
        }
    }
    out
}

/// Pattern with exactly one `{}` slot, e.g. `"{})"` or `"[{}]"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Wrapper(String);

impl Wrapper {
    pub fn new(pattern: impl Into<String>) -> Result<Self> {
        let pattern = pattern.into();
        let slots = pattern.matches(PLACEHOLDER).count();
        if slots != 1 {
            return Err(Error::CatalogValidation(format!(
                "wrapper {pattern:?} must contain exactly one `{{}}` slot, found {slots}"
            )));
        }
        Ok(Self(pattern))
    }

    pub fn pattern(&self) -> &str {
        &self.0
    }

    pub fn wrap(&self, item: &str) -> String {
        self.0.replacen(PLACEHOLDER, item, 1)
    }
}

impl TryFrom<String> for Wrapper {
    type Error = Error;
    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Wrapper> for String {
    fn from(value: Wrapper) -> Self {
        value.0
    }
}

impl fmt::Display for Wrapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The six independently varied format dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    DescriptorTransforms,
    Separators,
    Spaces,
    TextOptionSeparators,
    OptionItemStyles,
    OptionItemWrappers,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Self::DescriptorTransforms,
        Self::Separators,
        Self::Spaces,
        Self::TextOptionSeparators,
        Self::OptionItemStyles,
        Self::OptionItemWrappers,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Self::DescriptorTransforms => "descriptor_transforms",
            Self::Separators => "separators",
            Self::Spaces => "spaces",
            Self::TextOptionSeparators => "text_option_separators",
            Self::OptionItemStyles => "option_item_styles",
            Self::OptionItemWrappers => "option_item_wrappers",
        }
    }
}

/// Per-component list sizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSizes {
    pub descriptor_transforms: usize,
    pub separators: usize,
    pub spaces: usize,
    pub text_option_separators: usize,
    pub option_item_styles: usize,
    pub option_item_wrappers: usize,
}

impl ComponentSizes {
    pub fn get(&self, component: Component) -> usize {
        match component {
            Component::DescriptorTransforms => self.descriptor_transforms,
            Component::Separators => self.separators,
            Component::Spaces => self.spaces,
            Component::TextOptionSeparators => self.text_option_separators,
            Component::OptionItemStyles => self.option_item_styles,
            Component::OptionItemWrappers => self.option_item_wrappers,
        }
    }
}

/// Validated, deduplicated lists of values for every format component.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatComponentCatalog {
    descriptor_transforms: Vec<DescriptorTransform>,
    separators: Vec<String>,
    spaces: Vec<String>,
    text_option_separators: Vec<String>,
    option_item_styles: Vec<ItemStyle>,
    option_item_wrappers: Vec<Wrapper>,
    original_sizes: ComponentSizes,
}

impl Default for FormatComponentCatalog {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CATALOG).expect("built-in catalog is valid")
    }
}

impl FormatComponentCatalog {
    /// Build a catalog from raw lists. Exact duplicates are dropped (first
    /// occurrence wins) and the original list sizes are kept for reference.
    pub fn new(
        descriptor_transforms: Vec<DescriptorTransform>,
        separators: Vec<String>,
        spaces: Vec<String>,
        text_option_separators: Vec<String>,
        option_item_styles: Vec<ItemStyle>,
        option_item_wrappers: Vec<Wrapper>,
    ) -> Result<Self> {
        let original_sizes = ComponentSizes {
            descriptor_transforms: descriptor_transforms.len(),
            separators: separators.len(),
            spaces: spaces.len(),
            text_option_separators: text_option_separators.len(),
            option_item_styles: option_item_styles.len(),
            option_item_wrappers: option_item_wrappers.len(),
        };
        let catalog = Self {
            descriptor_transforms: dedup(descriptor_transforms),
            separators: dedup(separators),
            spaces: dedup(spaces),
            text_option_separators: dedup(text_option_separators),
            option_item_styles: dedup(option_item_styles),
            option_item_wrappers: dedup(option_item_wrappers),
            original_sizes,
        };
        for component in Component::ALL {
            let size = catalog.sizes().get(component);
            if size == 0 {
                return Err(Error::CatalogValidation(format!(
                    "component list `{}` is empty",
                    component.key()
                )));
            }
            let original = original_sizes.get(component);
            if original != size {
                log::info!(
                    "catalog `{}`: dropped {} duplicate value(s) ({} -> {})",
                    component.key(),
                    original - size,
                    original,
                    size
                );
            }
        }
        Ok(catalog)
    }

    /// Load from a catalog file, or the built-in defaults when `source` is `None`.
    pub fn load(source: Option<&Path>) -> Result<Self> {
        match source {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                Self::from_toml_str(&text)
            }
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse()?;
        for key in table.keys() {
            if !Component::ALL.iter().any(|c| c.key() == key) {
                return Err(Error::CatalogSchema {
                    component: key.clone(),
                    message: "unknown component".into(),
                });
            }
        }

        let transforms = string_list(&table, Component::DescriptorTransforms)?
            .into_iter()
            .map(|raw| {
                DescriptorTransform::parse(&raw).ok_or_else(|| Error::CatalogSchema {
                    component: Component::DescriptorTransforms.key().into(),
                    message: format!(
                        "unknown transform {raw:?} (expected title|upper|lower|identity)"
                    ),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let styles = string_list(&table, Component::OptionItemStyles)?
            .into_iter()
            .map(|raw| {
                ItemStyle::parse(&raw).ok_or_else(|| Error::CatalogSchema {
                    component: Component::OptionItemStyles.key().into(),
                    message: format!("unknown item style {raw:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let wrappers = string_list(&table, Component::OptionItemWrappers)?
            .into_iter()
            .map(Wrapper::new)
            .collect::<Result<Vec<_>>>()?;

        Self::new(
            transforms,
            string_list(&table, Component::Separators)?,
            string_list(&table, Component::Spaces)?,
            string_list(&table, Component::TextOptionSeparators)?,
            styles,
            wrappers,
        )
    }

    pub fn to_toml_string(&self) -> String {
        let mut table = toml::Table::new();
        let mut put = |component: Component, values: Vec<String>| {
            table.insert(
                component.key().to_string(),
                toml::Value::Array(values.into_iter().map(toml::Value::String).collect()),
            );
        };
        put(
            Component::DescriptorTransforms,
            self.descriptor_transforms
                .iter()
                .map(|t| t.keyword().to_string())
                .collect(),
        );
        put(Component::Separators, self.separators.clone());
        put(Component::Spaces, self.spaces.clone());
        put(
            Component::TextOptionSeparators,
            self.text_option_separators.clone(),
        );
        put(
            Component::OptionItemStyles,
            self.option_item_styles
                .iter()
                .map(|s| s.keyword().to_string())
                .collect(),
        );
        put(
            Component::OptionItemWrappers,
            self.option_item_wrappers
                .iter()
                .map(|w| w.pattern().to_string())
                .collect(),
        );
        toml::to_string(&table).expect("string table serializes")
    }

    pub fn descriptor_transforms(&self) -> &[DescriptorTransform] {
        &self.descriptor_transforms
    }

    pub fn separators(&self) -> &[String] {
        &self.separators
    }

    pub fn spaces(&self) -> &[String] {
        &self.spaces
    }

    pub fn text_option_separators(&self) -> &[String] {
        &self.text_option_separators
    }

    pub fn option_item_styles(&self) -> &[ItemStyle] {
        &self.option_item_styles
    }

    pub fn option_item_wrappers(&self) -> &[Wrapper] {
        &self.option_item_wrappers
    }

    /// Deduplicated list sizes.
    pub fn sizes(&self) -> ComponentSizes {
        ComponentSizes {
            descriptor_transforms: self.descriptor_transforms.len(),
            separators: self.separators.len(),
            spaces: self.spaces.len(),
            text_option_separators: self.text_option_separators.len(),
            option_item_styles: self.option_item_styles.len(),
            option_item_wrappers: self.option_item_wrappers.len(),
        }
    }

    /// List sizes as they appeared in the source, before deduplication.
    pub fn original_sizes(&self) -> ComponentSizes {
        self.original_sizes
    }

    /// Components that vary for a task kind, in canonical order.
    pub fn active_components(with_options: bool) -> &'static [Component] {
        if with_options {
            &Component::ALL
        } else {
            &Component::ALL[..3]
        }
    }

    /// Number of distinct formats for a task kind.
    pub fn format_universe_size(&self, with_options: bool) -> u64 {
        let sizes = self.sizes();
        Self::active_components(with_options)
            .iter()
            .map(|c| sizes.get(*c) as u64)
            .product()
    }

    pub fn find_separator(&self, value: &str) -> Option<usize> {
        self.separators.iter().position(|s| s == value)
    }

    pub fn find_space(&self, value: &str) -> Option<usize> {
        self.spaces.iter().position(|s| s == value)
    }

    pub fn find_text_option_separator(&self, value: &str) -> Option<usize> {
        self.text_option_separators.iter().position(|s| s == value)
    }

    pub fn find_transform(&self, value: DescriptorTransform) -> Option<usize> {
        self.descriptor_transforms.iter().position(|t| *t == value)
    }

    pub fn find_style(&self, value: ItemStyle) -> Option<usize> {
        self.option_item_styles.iter().position(|s| *s == value)
    }

    pub fn find_wrapper(&self, pattern: &str) -> Option<usize> {
        self.option_item_wrappers
            .iter()
            .position(|w| w.pattern() == pattern)
    }

    /// Wrapped option labels for `count` options, e.g. `["A)", "B)"]`.
    pub fn enumerate_option_labels(
        &self,
        style: usize,
        wrapper: usize,
        count: usize,
    ) -> Result<Vec<String>> {
        Ok(self
            .option_labels(style, wrapper, count)?
            .into_iter()
            .map(|label| label.wrapped)
            .collect())
    }

    pub(crate) fn option_labels(
        &self,
        style: usize,
        wrapper: usize,
        count: usize,
    ) -> Result<Vec<OptionLabel>> {
        let style = *self.option_item_styles.get(style).ok_or_else(|| {
            Error::FormatMismatch(format!("option item style index {style} out of range"))
        })?;
        let wrapper = self.option_item_wrappers.get(wrapper).ok_or_else(|| {
            Error::FormatMismatch(format!("option item wrapper index {wrapper} out of range"))
        })?;
        if count == 0 {
            return Err(Error::Render("option count must be at least 1".into()));
        }
        if count > style.capacity() {
            return Err(Error::Capacity(format!(
                "style `{}` enumerates at most {} items, {} requested",
                style.keyword(),
                style.capacity(),
                count
            )));
        }
        Ok((0..count)
            .map(|i| {
                let item = style.item(i).expect("within capacity");
                let wrapped = wrapper.wrap(&item);
                OptionLabel { item, wrapped }
            })
            .collect())
    }
}

/// Bare enumeration item (`"B"`) and its wrapped form (`"B)"`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptionLabel {
    pub item: String,
    pub wrapped: String,
}

fn dedup<T: PartialEq>(values: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(values.len());
    for value in values {
        if !out.contains(&value) {
            out.push(value);
        }
    }
    out
}

fn string_list(table: &toml::Table, component: Component) -> Result<Vec<String>> {
    let schema = |message: String| Error::CatalogSchema {
        component: component.key().to_string(),
        message,
    };
    let value = table
        .get(component.key())
        .ok_or_else(|| schema("missing list".into()))?;
    let array = value.as_array().ok_or_else(|| {
        schema(format!(
            "expected a list of strings, found {}",
            value.type_str()
        ))
    })?;
    array
        .iter()
        .enumerate()
        .map(|(i, item)| {
            item.as_str().map(unescape).ok_or_else(|| {
                schema(format!(
                    "entry {i} is a {}, expected string",
                    item.type_str()
                ))
            })
        })
        .collect()
}

/// Interpret literal `\n` and `\t` two-character sequences.
fn unescape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(ch) = chars.next() {
        if ch == '\\' {
            match chars.peek() {
                Some('n') => {
                    chars.next();
                    out.push('\n');
                    continue;
                }
                Some('t') => {
                    chars.next();
                    out.push('\t');
                    continue;
                }
                _ => {}
            }
        }
        out.push(ch);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_catalog_transforms() {
        let catalog = FormatComponentCatalog::load(None).unwrap();
        assert_eq!(
            catalog.descriptor_transforms(),
            &[
                DescriptorTransform::Title,
                DescriptorTransform::Upper,
                DescriptorTransform::Lower,
                DescriptorTransform::Identity
            ]
        );
    }

    #[test]
    fn default_catalog_styles() {
        let catalog = FormatComponentCatalog::default();
        assert_eq!(
            catalog.option_item_styles(),
            &[
                ItemStyle::Arabic,
                ItemStyle::LatinUpper,
                ItemStyle::LatinLower,
                ItemStyle::RomanUpper,
                ItemStyle::RomanLower
            ]
        );
    }

    #[test]
    fn default_catalog_dedup_sizes() {
        let catalog = FormatComponentCatalog::default();
        let original = catalog.original_sizes();
        assert_eq!(original.separators, 15);
        assert_eq!(original.spaces, 16);
        assert_eq!(original.text_option_separators, 4);
        let sizes = catalog.sizes();
        assert_eq!(sizes.separators, 14);
        assert_eq!(sizes.spaces, 13);
        assert_eq!(sizes.text_option_separators, 3);
        assert_eq!(sizes.option_item_wrappers, 6);
    }

    #[test]
    fn empty_separator_list_is_rejected() {
        let text = DEFAULT_CATALOG.replace(
            "separators = ['', '::: ', ':: ', ': ', ' \\n\\t', '\\n ', ' : ', ' - ', ' ', '\\n ', '\\n\\t', ':', '::', '- ', '\\t']",
            "separators = []",
        );
        assert!(text.contains("separators = []"));
        let err = FormatComponentCatalog::from_toml_str(&text).unwrap_err();
        assert!(
            matches!(err, Error::CatalogValidation(ref m) if m.contains("separators")),
            "{err}"
        );
    }

    #[test]
    fn schema_error_names_component() {
        let text = DEFAULT_CATALOG.replace("spaces = [", "spaces = 3\nunused = [");
        let err = FormatComponentCatalog::from_toml_str(&text).unwrap_err();
        match err {
            Error::CatalogSchema { component, .. } => {
                assert!(component == "spaces" || component == "unused")
            }
            other => panic!("unexpected {other}"),
        }

        let text =
            DEFAULT_CATALOG.replace("option_item_wrappers = [", "option_item_wrappers = [3, ");
        let err = FormatComponentCatalog::from_toml_str(&text).unwrap_err();
        assert!(
            matches!(err, Error::CatalogSchema { ref component, .. } if component == "option_item_wrappers")
        );
    }

    #[test]
    fn wrapper_requires_single_slot() {
        assert!(Wrapper::new("{})").is_ok());
        assert!(Wrapper::new("()").is_err());
        assert!(Wrapper::new("{}{}").is_err());
    }

    #[test]
    fn escapes_are_interpreted() {
        assert_eq!(unescape("\\n\\t"), "\n\t");
        assert_eq!(unescape("a\\b"), "a\\b");
    }

    #[test]
    fn python_title_semantics() {
        assert_eq!(DescriptorTransform::Title.apply("question"), "Question");
        assert_eq!(
            DescriptorTransform::Title.apply("the ANSWER is"),
            "The Answer Is"
        );
        assert_eq!(DescriptorTransform::Title.apply("it's 1st"), "It'S 1St");
    }

    #[test]
    fn item_labels() {
        assert_eq!(ItemStyle::RomanUpper.item(3).unwrap(), "IV");
        assert_eq!(ItemStyle::RomanLower.item(8).unwrap(), "ix");
        assert_eq!(ItemStyle::LatinUpper.item(25).unwrap(), "Z");
        assert!(ItemStyle::LatinUpper.item(26).is_none());
        assert_eq!(ItemStyle::Arabic.item(9).unwrap(), "10");
    }

    #[test]
    fn enumerate_labels_examples() {
        let catalog = FormatComponentCatalog::default();
        let arabic = catalog.find_style(ItemStyle::Arabic).unwrap();
        let dot = catalog.find_wrapper("{}.").unwrap();
        assert_eq!(
            catalog.enumerate_option_labels(arabic, dot, 3).unwrap(),
            ["1.", "2.", "3."]
        );

        let roman = catalog.find_style(ItemStyle::RomanUpper).unwrap();
        let bracket = catalog.find_wrapper("[{}]").unwrap();
        assert_eq!(
            catalog.enumerate_option_labels(roman, bracket, 2).unwrap(),
            ["[I]", "[II]"]
        );

        let latin = catalog.find_style(ItemStyle::LatinUpper).unwrap();
        let err = catalog.enumerate_option_labels(latin, dot, 27).unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }

    #[test]
    fn toml_round_trip() {
        let catalog = FormatComponentCatalog::default();
        let again = FormatComponentCatalog::from_toml_str(&catalog.to_toml_string()).unwrap();
        assert_eq!(catalog.sizes(), again.sizes());
        assert_eq!(catalog.separators(), again.separators());
        assert_eq!(catalog.spaces(), again.spaces());
    }
}
