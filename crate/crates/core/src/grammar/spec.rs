use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::catalog::FormatComponentCatalog;
use crate::error::{Error, Result};
use crate::seed;

/// Option-rendering components; present only for tasks with answer options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OptionFormat {
    pub text_option_separator: usize,
    pub item_style: usize,
    pub item_wrapper: usize,
}

/// One concrete choice per format component, as catalog indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FormatSpec {
    pub descriptor_transform: usize,
    pub separator: usize,
    pub space: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<OptionFormat>,
}

impl FormatSpec {
    pub fn plain(descriptor_transform: usize, separator: usize, space: usize) -> Self {
        Self {
            descriptor_transform,
            separator,
            space,
            options: None,
        }
    }

    pub fn with_options(
        descriptor_transform: usize,
        separator: usize,
        space: usize,
        text_option_separator: usize,
        item_style: usize,
        item_wrapper: usize,
    ) -> Self {
        Self {
            descriptor_transform,
            separator,
            space,
            options: Some(OptionFormat {
                text_option_separator,
                item_style,
                item_wrapper,
            }),
        }
    }

    pub fn has_options(&self) -> bool {
        self.options.is_some()
    }

    /// Component indices in canonical order (3 or 6 entries).
    pub fn components(&self) -> Vec<usize> {
        let mut out = vec![self.descriptor_transform, self.separator, self.space];
        if let Some(o) = self.options {
            out.extend([o.text_option_separator, o.item_style, o.item_wrapper]);
        }
        out
    }

    fn from_components(values: &[usize]) -> Self {
        match values {
            [d, s, sp] => Self::plain(*d, *s, *sp),
            [d, s, sp, t, st, w] => Self::with_options(*d, *s, *sp, *t, *st, *w),
            _ => unreachable!("format has 3 or 6 components"),
        }
    }

    /// Number of components set to something other than the catalog's first value.
    pub fn complexity(&self) -> usize {
        self.components().iter().filter(|&&i| i != 0).count()
    }

    pub fn validate(&self, catalog: &FormatComponentCatalog) -> Result<()> {
        let sizes = catalog.sizes();
        let active = FormatComponentCatalog::active_components(self.has_options());
        for (component, index) in active.iter().zip(self.components()) {
            if index >= sizes.get(*component) {
                return Err(Error::FormatMismatch(format!(
                    "index {index} out of range for `{}` (size {})",
                    component.key(),
                    sizes.get(*component)
                )));
            }
        }
        Ok(())
    }

    /// Stable hash of the component *values* (not indices), so fingerprints
    /// survive catalog reordering.
    pub fn fingerprint(&self, catalog: &FormatComponentCatalog) -> Result<String> {
        self.validate(catalog)?;
        let mut parts: Vec<String> = vec![
            catalog.descriptor_transforms()[self.descriptor_transform]
                .keyword()
                .to_string(),
            catalog.separators()[self.separator].clone(),
            catalog.spaces()[self.space].clone(),
        ];
        if let Some(o) = self.options {
            parts.push(catalog.text_option_separators()[o.text_option_separator].clone());
            parts.push(
                catalog.option_item_styles()[o.item_style]
                    .keyword()
                    .to_string(),
            );
            parts.push(
                catalog.option_item_wrappers()[o.item_wrapper]
                    .pattern()
                    .to_string(),
            );
        }
        Ok(seed::stable_hex(&parts)[..16].to_string())
    }

    /// Human-readable summary of the component values.
    pub fn describe(&self, catalog: &FormatComponentCatalog) -> Result<String> {
        self.validate(catalog)?;
        let mut out = format!(
            "transform={} separator={:?} space={:?}",
            catalog.descriptor_transforms()[self.descriptor_transform].keyword(),
            catalog.separators()[self.separator],
            catalog.spaces()[self.space],
        );
        if let Some(o) = self.options {
            out.push_str(&format!(
                " text_option_separator={:?} style={} wrapper={:?}",
                catalog.text_option_separators()[o.text_option_separator],
                catalog.option_item_styles()[o.item_style].keyword(),
                catalog.option_item_wrappers()[o.item_wrapper].pattern(),
            ));
        }
        Ok(out)
    }
}

impl FormatComponentCatalog {
    /// Decode a position in the mixed-radix format universe.
    pub fn format_at(&self, mut index: u64, with_options: bool) -> Result<FormatSpec> {
        let universe = self.format_universe_size(with_options);
        if index >= universe {
            return Err(Error::Capacity(format!(
                "format index {index} outside universe of {universe}"
            )));
        }
        let sizes = self.sizes();
        let active = Self::active_components(with_options);
        let mut values = vec![0usize; active.len()];
        for (slot, component) in active.iter().enumerate().rev() {
            let radix = sizes.get(*component) as u64;
            values[slot] = (index % radix) as usize;
            index /= radix;
        }
        Ok(FormatSpec::from_components(&values))
    }

    /// `n` distinct formats drawn uniformly without replacement.
    pub fn sample_formats(
        &self,
        with_options: bool,
        n: usize,
        seed: u64,
    ) -> Result<Vec<FormatSpec>> {
        let universe = self.format_universe_size(with_options);
        if n as u64 > universe {
            return Err(Error::Capacity(format!(
                "cannot sample {n} distinct formats from a universe of {universe}"
            )));
        }
        let mut rng = seed::rng_from_seed(seed);
        let indices = rand::seq::index::sample(&mut rng, universe as usize, n);
        indices
            .into_iter()
            .map(|i| self.format_at(i as u64, with_options))
            .collect()
    }

    /// Every format of the universe in index order. Intended for small catalogs.
    pub fn all_formats(&self, with_options: bool) -> Result<Vec<FormatSpec>> {
        (0..self.format_universe_size(with_options))
            .map(|i| self.format_at(i, with_options))
            .collect()
    }
}

/// Split formats so the test side only holds unseen *combinations* of
/// component values that each occur somewhere in train.
///
/// Candidates are visited in seeded random order and moved to test greedily
/// while train keeps covering every value used by test, up to half the list.
pub fn compositional_split(
    formats: &[FormatSpec],
    seed: u64,
) -> Result<(Vec<FormatSpec>, Vec<FormatSpec>)> {
    let mut distinct: Vec<FormatSpec> = Vec::new();
    for f in formats {
        if !distinct.contains(f) {
            distinct.push(*f);
        }
    }
    if distinct.len() < 4 {
        return Err(Error::SplitInfeasible(format!(
            "need at least 4 distinct formats, got {}",
            distinct.len()
        )));
    }
    let width = distinct[0].components().len();
    if distinct.iter().any(|f| f.components().len() != width) {
        return Err(Error::SplitInfeasible(
            "formats mix option-bearing and option-free specs".into(),
        ));
    }
    let varied = (0..width).any(|c| {
        distinct
            .iter()
            .map(|f| f.components()[c])
            .collect::<HashSet<_>>()
            .len()
            >= 2
    });
    if !varied {
        return Err(Error::SplitInfeasible(
            "no component takes two distinct values".into(),
        ));
    }

    let tuples: Vec<Vec<usize>> = distinct.iter().map(FormatSpec::components).collect();
    let mut order: Vec<usize> = (0..distinct.len()).collect();
    order.shuffle(&mut seed::rng_from_seed(seed));

    let target = distinct.len() / 2;
    let mut in_test = vec![false; distinct.len()];
    let mut test_count = 0;
    for &candidate in &order {
        if test_count == target {
            break;
        }
        in_test[candidate] = true;
        if coverage_holds(&tuples, &in_test) {
            test_count += 1;
        } else {
            in_test[candidate] = false;
        }
    }
    if test_count == 0 {
        return Err(Error::SplitInfeasible(
            "no format can be held out while train still covers its component values".into(),
        ));
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, f) in distinct.into_iter().enumerate() {
        if in_test[i] {
            test.push(f);
        } else {
            train.push(f);
        }
    }
    Ok((train, test))
}

fn coverage_holds(tuples: &[Vec<usize>], in_test: &[bool]) -> bool {
    let width = tuples[0].len();
    let mut seen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); width];
    let mut any_train = false;
    for (tuple, &test) in tuples.iter().zip(in_test) {
        if !test {
            any_train = true;
            for (c, v) in tuple.iter().enumerate() {
                seen[c].insert(*v);
            }
        }
    }
    any_train
        && tuples
            .iter()
            .zip(in_test)
            .filter(|(_, &test)| test)
            .all(|(tuple, _)| tuple.iter().enumerate().all(|(c, v)| seen[c].contains(v)))
}

/// Check the two split postconditions; returns a description of the first violation.
pub fn verify_compositional_split(train: &[FormatSpec], test: &[FormatSpec]) -> Result<(), String> {
    if train.is_empty() || test.is_empty() {
        return Err("both sides must be non-empty".into());
    }
    for t in test {
        if train.contains(t) {
            return Err(format!("test format {t:?} also appears in train"));
        }
        for (c, v) in t.components().iter().enumerate() {
            if !train.iter().any(|f| f.components().get(c) == Some(v)) {
                return Err(format!(
                    "component {c} value {v} of {t:?} never seen in train"
                ));
            }
        }
    }
    Ok(())
}
