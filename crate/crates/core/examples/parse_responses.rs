//! Runs assorted model responses through the parser.

use hot_annotate::parser::{parse_response, ParseMode};
use hot_annotate::prompts::PromptId;

fn main() {
    let samples = [
        (PromptId::P1, "a. Yes"),
        (PromptId::P1, "It depends. Some readers could find it offensive, others would not."),
        (PromptId::P2, "No."),
        (PromptId::P2, "1. No\n2. Yes"),
        (PromptId::P3, "0.95"),
        (PromptId::P3, "80%"),
        (PromptId::P3, "I cannot rate this."),
        (PromptId::P4, "Yes. The comment includes a derogatory statement about the person being addressed."),
        (PromptId::P5, "0.3 While the comment may be seen as critical, it does not contain any explicit insult."),
    ];
    for (prompt, raw) in samples {
        let mode = ParseMode::for_prompt(prompt);
        print!("{prompt} {mode:?} {raw:?}\n  -> ");
        match parse_response(raw, prompt, mode) {
            Ok(out) => println!("{:?} explanation={:?}", out.kind, out.explanation),
            Err(e) => println!("failed: {e}"),
        }
    }
}
