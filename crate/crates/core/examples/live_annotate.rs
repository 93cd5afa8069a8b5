//! Sends one prompt to a chat-completions endpoint. Needs HOT_API_KEY;
//! HOT_API_BASE overrides the endpoint base URL.
//!
//! ```text
//! HOT_API_KEY=... cargo run --example live_annotate -- "comment text"
//! ```

use hot_annotate::corpus::{Comment, Concept, Definitions, Platform};
use hot_annotate::gateway::{annotate, AnnotationRequest, LiveBackend, LiveConfig, RequestParams, API_KEY_ENV};
use hot_annotate::parser::{parse_response, ParseMode};
use hot_annotate::prompts::{render_prompt, PromptId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = LiveConfig::from_env();
    if config.api_key.is_none() {
        eprintln!("set {API_KEY_ENV} to run this example");
        return Ok(());
    }
    let text = std::env::args().nth(1).unwrap_or_else(|| "Well, this is completely false #fakenews".into());
    let comment = Comment { id: "live-1".into(), platform: Platform::Other, text };
    let backend = LiveBackend::new(config)?;
    for concept in Concept::ALL {
        let rendered = render_prompt(PromptId::P2, concept, &comment, &Definitions::bundled())?;
        let resp = annotate(&AnnotationRequest::new(rendered, RequestParams::default(), 0), &backend)?;
        let parsed = parse_response(&resp.text, PromptId::P2, ParseMode::for_prompt(PromptId::P2));
        println!("{:<10} {:?} ({} ms) -> {:?}", concept.name(), resp.text, resp.latency_ms, parsed.map(|p| p.kind));
    }
    Ok(())
}
