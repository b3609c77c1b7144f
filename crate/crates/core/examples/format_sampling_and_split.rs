//! Sample formats from the catalog universe and build a compositional split,
//! where every test format is an unseen combination of values seen in train.
//!
//! ```bash
//! cargo run --example format_sampling_and_split
//! ```

use format_robustness::grammar::{
    compositional_split, verify_compositional_split, FormatComponentCatalog,
};

fn main() -> format_robustness::Result<()> {
    let catalog = FormatComponentCatalog::default();
    println!("component sizes: {:?}", catalog.sizes());
    println!(
        "universe: {} formats with options, {} without",
        catalog.format_universe_size(true),
        catalog.format_universe_size(false)
    );

    let formats = catalog.sample_formats(true, 10, 3)?;
    for f in &formats {
        println!("  {:?} complexity={}", f.components(), f.complexity());
    }

    let (train, test) = compositional_split(&formats, 3)?;
    println!("train {} / test {}", train.len(), test.len());
    for f in &test {
        println!("  unseen combination: {}", f.describe(&catalog)?);
    }
    verify_compositional_split(&train, &test).expect("split satisfies its postconditions");
    println!("split verified");
    Ok(())
}
