//! Sensitivity-aware decoding: perturb the input, measure how much each
//! option's probability moves, and penalize unstable options.
//!
//! ```bash
//! cargo run --example sensitivity_aware_decoding
//! ```

use format_robustness::backend::{BackendRequest, SyntheticBiasBackend};
use format_robustness::grammar::PromptText;
use format_robustness::methods::{perturb_tokens, sad_predict, sad_scores, PerturbationConfig};

fn main() -> format_robustness::Result<()> {
    let config = PerturbationConfig::default().with_seed(3);
    let input = "The service was friendly but the food arrived cold and late";
    for draw in 0..config.n_perturbations {
        println!("draw {draw}: {}", perturb_tokens(input, &config, draw)?);
    }

    // the scoring rule alone
    let scores = sad_scores(&[0.6, 0.4], &[0.2, 0.0], 0.7)?;
    println!("scores for p=[0.6, 0.4], s=[0.2, 0.0]: {scores:?}");

    // end to end against a noisy synthetic model
    let backend = SyntheticBiasBackend::new(vec![0.5, 0.0], 0.0, 1.0, 11);
    let options = vec!["positive".to_string(), "negative".to_string()];
    let build = |text: &str| {
        Ok(BackendRequest::ranking(
            PromptText::Completion {
                text: format!("Review: {text}\nSentiment:"),
            },
            options.clone(),
            "synthetic",
        ))
    };
    let prediction = sad_predict(&backend, input, build, 0.7, &config)?;
    println!("chosen {:?}", prediction.chosen_index);
    println!(
        "diagnostics {}",
        serde_json::to_string_pretty(&prediction.diagnostics).unwrap()
    );
    Ok(())
}
