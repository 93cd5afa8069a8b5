//! Lists the five templates and renders one for each concept.

use hot_annotate::corpus::{Comment, Concept, Definitions, Platform};
use hot_annotate::prompts::{list_prompts, render_prompt, PromptId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for t in list_prompts() {
        println!("{}  {:?}  explanation={}  patterns={:?}", t.id, t.output_kind, t.wants_explanation, t.patterns);
    }

    let comment = Comment {
        id: "example-1".into(),
        platform: Platform::Twitter,
        text: "Well, this is completely false #fakenews".into(),
    };
    let defs = Definitions::bundled();
    for c in Concept::ALL {
        let r = render_prompt(PromptId::P4, c, &comment, &defs)?;
        println!("\n--- {} / {} ---\n{}", r.prompt_id, c.name(), r.instruction_text);
    }
    let r = render_prompt(PromptId::P1, Concept::Offensive, &comment, &defs)?;
    println!("\n--- inline P1 ---\n{}", r.inline_text());
    Ok(())
}
