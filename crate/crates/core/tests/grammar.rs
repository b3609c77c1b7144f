use std::collections::HashSet;

use format_robustness::data::{Descriptors, Instance, Task};
use format_robustness::grammar::{
    compositional_split, render, DescriptorTransform, FormatComponentCatalog, FormatSpec,
    ItemStyle, PromptText, RenderMode, Wrapper,
};
use format_robustness::Error;
use proptest::prelude::*;

fn mc_task(instruction: &str, options: &[&str]) -> Task {
    let options: Vec<String> = options.iter().map(|s| s.to_string()).collect();
    let instances = (0..4)
        .map(|i| {
            Instance::new(
                format!("u{i}"),
                format!("zq input number {i}"),
                options[i % options.len()].clone(),
            )
        })
        .collect();
    Task::new(
        "t",
        instruction,
        Some(options),
        Descriptors::new("quEstion", "AnSwer"),
        instances,
    )
    .unwrap()
}

fn find(catalog: &FormatComponentCatalog, row: [&str; 6]) -> FormatSpec {
    let transform = match row[0] {
        "title" => DescriptorTransform::Title,
        "upper" => DescriptorTransform::Upper,
        _ => unreachable!(),
    };
    let style = match row[4] {
        "A" => ItemStyle::LatinUpper,
        "1" => ItemStyle::Arabic,
        _ => unreachable!(),
    };
    FormatSpec::with_options(
        catalog.find_transform(transform).unwrap(),
        catalog.find_separator(row[1]).unwrap(),
        catalog.find_space(row[2]).unwrap(),
        catalog.find_text_option_separator(row[3]).unwrap(),
        catalog.find_style(style).unwrap(),
        catalog.find_wrapper(row[5]).unwrap(),
    )
}

#[test]
fn worked_examples_render_byte_exactly() {
    let catalog = FormatComponentCatalog::default();
    let task = Task::new(
        "t",
        "",
        Some(vec!["{o1}".into(), "{o2}".into()]),
        Descriptors::new("question", "answer"),
        vec![Instance::new("u", "{q}", "{o1}")],
    )
    .unwrap();
    let first = find(&catalog, ["title", ": ", " ", " ", "A", "{})"]);
    let second = find(&catalog, ["upper", "- ", "\n", "\t", "1", "{}."]);
    let out = |f: &FormatSpec| {
        render(
            &catalog,
            &task,
            &task.instances[0],
            &[],
            f,
            RenderMode::Completion,
        )
        .unwrap()
    };
    assert_eq!(
        out(&first).prompt.flat(),
        "Question: {q} A) {o1} B) {o2} Answer: "
    );
    assert_eq!(
        out(&second).prompt.flat(),
        "QUESTION- {q}\n1.\t{o1}\n2.\t{o2}\nANSWER- "
    );
}

#[test]
fn identity_rendering_is_plain_concatenation() {
    let catalog = FormatComponentCatalog::default();
    let task = Task::new(
        "t",
        "",
        None,
        Descriptors::new("Sentence", "Label"),
        vec![Instance::new("u", "the cat sat", "ok")],
    )
    .unwrap();
    let format = FormatSpec::plain(
        catalog
            .find_transform(DescriptorTransform::Identity)
            .unwrap(),
        catalog.find_separator("").unwrap(),
        catalog.find_space(" ").unwrap(),
    );
    let text = render(
        &catalog,
        &task,
        &task.instances[0],
        &[],
        &format,
        RenderMode::Completion,
    )
    .unwrap()
    .prompt
    .flat();
    let expected: Vec<char> = "Sentencethe cat sat Label".chars().collect();
    assert_eq!(text.chars().collect::<Vec<_>>(), expected);
}

/// Literal component lists of the catalog, deduplicated by a set.
#[test]
fn default_universe_matches_independent_product() {
    let lists: [&[&str]; 6] = [
        &["title", "upper", "lower", "identity"],
        &[
            "", "::: ", ":: ", ": ", " \n\t", "\n ", " : ", " - ", " ", "\n ", "\n\t", ":", "::",
            "- ", "\t",
        ],
        &[
            "", " ", "\n", " \n", " -- ", " ", "; \n", " || ", " <sep> ", " -- ", ", ", " \n ",
            " , ", "\n ", ". ", " , ",
        ],
        &["", " ", " ", "\t"],
        &["1", "A", "a", "I", "i"],
        &["({})", "{}.", "{})", "{} )", "[{}]", "<{}>"],
    ];
    let sizes: Vec<u64> = lists
        .iter()
        .map(|l| l.iter().collect::<HashSet<_>>().len() as u64)
        .collect();
    let catalog = FormatComponentCatalog::default();
    assert_eq!(
        catalog.format_universe_size(true),
        sizes.iter().product::<u64>()
    );
    assert_eq!(
        catalog.format_universe_size(false),
        sizes[..3].iter().product::<u64>()
    );
    assert_eq!(catalog.format_universe_size(true), 65520);
    assert_eq!(catalog.format_universe_size(false), 728);
}

#[test]
fn option_label_examples() {
    let catalog = FormatComponentCatalog::default();
    let arabic = catalog.find_style(ItemStyle::Arabic).unwrap();
    let roman = catalog.find_style(ItemStyle::RomanUpper).unwrap();
    let latin = catalog.find_style(ItemStyle::LatinUpper).unwrap();
    let dot = catalog.find_wrapper("{}.").unwrap();
    let bracket = catalog.find_wrapper("[{}]").unwrap();
    assert_eq!(
        catalog.enumerate_option_labels(arabic, dot, 3).unwrap(),
        ["1.", "2.", "3."]
    );
    assert_eq!(
        catalog.enumerate_option_labels(roman, bracket, 2).unwrap(),
        ["[I]", "[II]"]
    );
    assert!(matches!(
        catalog.enumerate_option_labels(latin, dot, 27),
        Err(Error::Capacity(_))
    ));
}

fn toy_catalog(sizes: [usize; 6]) -> FormatComponentCatalog {
    let strings = |n: usize, tag: &str| (0..n).map(|i| format!("{tag}{i}")).collect::<Vec<_>>();
    let transforms = [
        DescriptorTransform::Title,
        DescriptorTransform::Upper,
        DescriptorTransform::Lower,
        DescriptorTransform::Identity,
    ];
    let styles = [
        ItemStyle::Arabic,
        ItemStyle::LatinUpper,
        ItemStyle::LatinLower,
        ItemStyle::RomanUpper,
        ItemStyle::RomanLower,
    ];
    FormatComponentCatalog::new(
        transforms[..sizes[0]].to_vec(),
        strings(sizes[1], ":"),
        strings(sizes[2], " "),
        strings(sizes[3], "~"),
        styles[..sizes[4]].to_vec(),
        (0..sizes[5])
            .map(|i| Wrapper::new(format!("{i}{{}}")).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Brute-force check of the split postconditions, written against raw component tuples.
fn split_ok(train: &[FormatSpec], test: &[FormatSpec]) -> bool {
    if train.is_empty() || test.is_empty() {
        return false;
    }
    let train_tuples: Vec<Vec<usize>> = train.iter().map(|f| f.components()).collect();
    test.iter().all(|f| {
        let t = f.components();
        !train_tuples.contains(&t)
            && (0..t.len()).all(|slot| train_tuples.iter().any(|tr| tr[slot] == t[slot]))
    })
}

#[test]
fn seeded_default_split_passes_brute_force_checker() {
    let catalog = FormatComponentCatalog::default();
    let formats = catalog.sample_formats(true, 10, 3).unwrap();
    let (train, test) = compositional_split(&formats, 3).unwrap();
    assert!(split_ok(&train, &test));
    let mut all: Vec<FormatSpec> = train.iter().chain(&test).copied().collect();
    all.sort();
    let mut expected = formats.clone();
    expected.sort();
    assert_eq!(all, expected);
}

#[test]
fn toy_universe_sizes() {
    assert_eq!(
        toy_catalog([2, 2, 2, 1, 1, 1]).format_universe_size(false),
        8
    );
    assert_eq!(toy_catalog([2; 6]).format_universe_size(true), 64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sampled_formats_are_distinct_and_valid(n in 1usize..40, seed in any::<u64>(), with_options in any::<bool>()) {
        let catalog = FormatComponentCatalog::default();
        let formats = catalog.sample_formats(with_options, n, seed).unwrap();
        prop_assert_eq!(formats.len(), n);
        let distinct: HashSet<_> = formats.iter().collect();
        prop_assert_eq!(distinct.len(), n);
        for f in &formats {
            prop_assert!(f.validate(&catalog).is_ok());
            prop_assert_eq!(f.has_options(), with_options);
        }
        prop_assert_eq!(&formats, &catalog.sample_formats(with_options, n, seed).unwrap());
    }

    #[test]
    fn split_postconditions_hold(
        sizes in (2usize..4, 2usize..4, 2usize..4, 1usize..3, 1usize..3, 1usize..3),
        n in 4usize..12,
        seed in any::<u64>(),
    ) {
        let catalog = toy_catalog([sizes.0, sizes.1, sizes.2, sizes.3, sizes.4, sizes.5]);
        let n = n.min(catalog.format_universe_size(true) as usize);
        let formats = catalog.sample_formats(true, n, seed).unwrap();
        match compositional_split(&formats, seed) {
            Ok((train, test)) => {
                prop_assert!(split_ok(&train, &test));
                prop_assert_eq!(train.len() + test.len(), formats.len());
                prop_assert_eq!(compositional_split(&formats, seed).unwrap(), (train, test));
            }
            Err(Error::SplitInfeasible(_)) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn rendering_is_pure_and_injective(a in 0u64..65520, b in 0u64..65520, chat in any::<bool>()) {
        let catalog = FormatComponentCatalog::default();
        let task = mc_task("Pick one.", &["red", "blue", "green"]);
        let mode = if chat { RenderMode::Chat } else { RenderMode::Completion };
        let fa = catalog.format_at(a, true).unwrap();
        let fb = catalog.format_at(b, true).unwrap();
        let ra = render(&catalog, &task, &task.instances[0], &task.instances[1..3], &fa, mode).unwrap();
        prop_assert_eq!(&ra, &render(&catalog, &task, &task.instances[0], &task.instances[1..3], &fa, mode).unwrap());
        let rb = render(&catalog, &task, &task.instances[0], &task.instances[1..3], &fb, mode).unwrap();
        prop_assert_eq!(fa == fb, ra.prompt == rb.prompt);
        prop_assert_eq!(&ra.answer_surface_forms, &vec!["red".to_string(), "blue".into(), "green".into()]);
    }

    #[test]
    fn demonstration_blocks_share_the_test_pattern(index in 0u64..65520, n_demos in 0usize..4) {
        let catalog = FormatComponentCatalog::default();
        let task = mc_task("Pick one.", &["red", "blue"]);
        let format = catalog.format_at(index, true).unwrap();
        let user = |inst: &Instance, demos: &[Instance]| match render(&catalog, &task, inst, demos, &format, RenderMode::Chat).unwrap().prompt {
            PromptText::Chat { user, .. } => user,
            other => panic!("{other:?}"),
        };
        let test = &task.instances[0];
        let demos = &task.instances[1..1 + n_demos];
        let mut expected: Vec<String> = demos.iter().map(|d| user(d, &[]) + &d.gold).collect();
        expected.push(user(test, &[]));
        prop_assert_eq!(user(test, demos), expected.join("\n\n"));
    }
}

#[test]
fn hundred_random_split_draws() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(100);
    let mut feasible = 0;
    for _ in 0..100 {
        let sizes = [
            rng.random_range(2..5),
            rng.random_range(2..5),
            rng.random_range(2..5),
            rng.random_range(1..4),
            rng.random_range(1..4),
            rng.random_range(1..4),
        ];
        let catalog = toy_catalog(sizes);
        let seed = rng.random();
        let formats = catalog.sample_formats(true, 10, seed).unwrap();
        if let Ok((train, test)) = compositional_split(&formats, seed) {
            assert!(split_ok(&train, &test));
            feasible += 1;
        }
    }
    assert!(
        feasible >= 90,
        "only {feasible} of 100 draws admitted a split"
    );
}
