//! Score options and decode greedily against an OpenAI-compatible server,
//! with responses cached in a JSONL file.
//!
//! ```bash
//! FMT_BASE_URL=http://localhost:8000/v1 FMT_MODEL=my-model cargo run --example openai_backend
//! ```
//!
//! The bearer token is read from `OPENAI_API_KEY` when set. Servers without
//! echoed log-probabilities (most chat-only APIs) can only decode greedily.

use format_robustness::backend::{with_cache, Backend, BackendRequest, HttpBackend, HttpConfig};
use format_robustness::grammar::PromptText;

fn main() -> format_robustness::Result<()> {
    let (Ok(base_url), Ok(model)) = (std::env::var("FMT_BASE_URL"), std::env::var("FMT_MODEL"))
    else {
        eprintln!("set FMT_BASE_URL and FMT_MODEL to point at an OpenAI-compatible server");
        return Ok(());
    };
    let mut config = HttpConfig::new("api", base_url, model);
    config.completions_logprobs = std::env::var("FMT_NO_LOGPROBS").is_err();
    let cache_path = std::env::temp_dir().join("fmtrobust-openai-cache.jsonl");
    let backend = with_cache(HttpBackend::new(config), &cache_path)?;

    let prompt = PromptText::Completion {
        text: "Question: Is the sky blue? A) yes B) no Answer:".into(),
    };
    if backend.capabilities().ranking {
        let request = BackendRequest::ranking(
            prompt.clone(),
            vec![" yes".into(), " no".into()],
            backend.tag(),
        );
        let response = backend.call(&request)?;
        println!("option log-probabilities {:?}", response.option_logprobs);
    }

    let chat = PromptText::Chat {
        system: "Answer with yes or no.".into(),
        user: "Is the sky blue?".into(),
    };
    let response = backend.call(&BackendRequest::greedy(chat, 4, backend.tag()))?;
    println!(
        "generated {:?} in {} ms",
        response.generated_text, response.latency_ms
    );
    println!(
        "cache {} entries at {} ({} hits)",
        backend.len(),
        cache_path.display(),
        backend.hits()
    );
    Ok(())
}
