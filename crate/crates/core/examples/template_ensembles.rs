//! Probability averaging and majority voting over formats, and why the vote
//! resists a single outlier format.
//!
//! ```bash
//! cargo run --example template_ensembles
//! ```

use format_robustness::grammar::FormatComponentCatalog;
use format_robustness::methods::{ensemble_formats, template_ensemble_avg, template_ensemble_vote};

fn main() -> format_robustness::Result<()> {
    // four formats mildly prefer option 0, one outlier is extremely confident in option 1
    let probs = vec![
        vec![0.6, 0.4],
        vec![0.6, 0.4],
        vec![0.6, 0.4],
        vec![0.6, 0.4],
        vec![0.0, 1.0],
    ];
    let avg = template_ensemble_avg(&probs)?;
    println!(
        "average: {:?} -> option {:?}",
        avg.per_option_scores.unwrap(),
        avg.chosen_index
    );

    let votes: Vec<usize> = vec![0, 0, 0, 0, 1];
    let vote = template_ensemble_vote(&votes, 2)?;
    println!(
        "vote:    {} -> option {:?}",
        vote.diagnostics["vote_counts"], vote.chosen_index
    );

    // ensemble members used when evaluating a given format
    let catalog = FormatComponentCatalog::default();
    let evaluated = catalog.sample_formats(true, 1, 9)?[0];
    for (i, member) in ensemble_formats(&catalog, "toy01", &evaluated, 5, 9)?
        .iter()
        .enumerate()
    {
        println!("member {i}: {}", member.describe(&catalog)?);
    }
    Ok(())
}
