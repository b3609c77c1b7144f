//! Render one multiple-choice instance under several prompt formats.
//!
//! ```bash
//! cargo run --example render_formats
//! ```

use format_robustness::data::{Descriptors, Instance, Task};
use format_robustness::grammar::{
    render, DescriptorTransform, FormatComponentCatalog, FormatSpec, ItemStyle, RenderMode,
};

fn main() -> format_robustness::Result<()> {
    let catalog = FormatComponentCatalog::default();
    let task = Task::new(
        "demo",
        "Answer the question.",
        Some(vec!["Paris".into(), "Lyon".into()]),
        Descriptors::new("question", "answer"),
        vec![
            Instance::new("q1", "What is the capital of France?", "Paris"),
            Instance::new("q2", "Which city hosts the Fete des Lumieres?", "Lyon"),
        ],
    )?;

    let title_case = FormatSpec::with_options(
        catalog.find_transform(DescriptorTransform::Title).unwrap(),
        catalog.find_separator(": ").unwrap(),
        catalog.find_space(" ").unwrap(),
        catalog.find_text_option_separator(" ").unwrap(),
        catalog.find_style(ItemStyle::LatinUpper).unwrap(),
        catalog.find_wrapper("{})").unwrap(),
    );
    let shouting = FormatSpec::with_options(
        catalog.find_transform(DescriptorTransform::Upper).unwrap(),
        catalog.find_separator("- ").unwrap(),
        catalog.find_space("\n").unwrap(),
        catalog.find_text_option_separator("\t").unwrap(),
        catalog.find_style(ItemStyle::Arabic).unwrap(),
        catalog.find_wrapper("{}.").unwrap(),
    );

    for format in [title_case, shouting] {
        println!("--- {}", format.describe(&catalog)?);
        let out = render(
            &catalog,
            &task,
            &task.instances[0],
            &[],
            &format,
            RenderMode::Completion,
        )?;
        println!("{}", out.prompt.flat());
    }

    // with a demonstration, in chat layout, under three random formats
    for format in catalog.sample_formats(true, 3, 7)? {
        println!(
            "--- {} [{}]",
            format.describe(&catalog)?,
            format.fingerprint(&catalog)?
        );
        let out = render(
            &catalog,
            &task,
            &task.instances[0],
            &task.instances[1..],
            &format,
            RenderMode::Chat,
        )?;
        println!("{:#?}", out.prompt);
    }
    Ok(())
}
