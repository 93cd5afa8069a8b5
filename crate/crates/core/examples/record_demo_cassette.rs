//! Regenerates the bundled demo cassette from a deterministic scripted
//! responder, recording every request made by experiments 1, 3 and 4
//! (experiment 2 and the comparison reuse those keys).
//!
//! ```text
//! cargo run --example record_demo_cassette -- data/demo_cassette.jsonl
//! ```
//!
//! The target file is replaced.

use std::collections::HashMap;
use std::path::PathBuf;

use hot_annotate::corpus::{load_corpus, Concept};
use hot_annotate::experiment::{run_experiment_with, Experiment, ExperimentConfig};
use hot_annotate::gateway::{AnnotationRequest, CassetteWriter, GatewayError, RecordingBackend, ScriptedBackend};
use hot_annotate::prompts::PromptId;
use sha2::{Digest, Sha256};

fn unit_hash(parts: &[&str]) -> f64 {
    let digest = Sha256::digest(parts.join("|").as_bytes());
    let n = u64::from_be_bytes(digest[..8].try_into().unwrap());
    n as f64 / u64::MAX as f64
}

fn yes_text(concept: Concept, pick: f64) -> String {
    let main = match concept {
        Concept::Hateful => "The comment expresses hatred towards a targeted group and is intended to be derogatory towards its members.",
        Concept::Offensive => "The comment contains derogatory language that can be considered hurtful and offensive.",
        Concept::Toxic => "The comment is rude and disrespectful, which is likely to make readers want to leave the discussion.",
    };
    let extra = [
        "It targets the people being addressed rather than their ideas.",
        "The tone can be perceived as insulting by other readers.",
        "The language is likely to escalate the conversation.",
    ];
    format!("{main} {}", extra[(pick * 3.0) as usize % 3])
}

fn no_text(concept: Concept, pick: f64) -> String {
    let main = match concept {
        Concept::Hateful => "The comment does not express hatred towards a targeted group or intend to be derogatory.",
        Concept::Offensive => "The comment does not contain any hurtful, derogatory, or obscene language.",
        Concept::Toxic => "The comment does not contain rude or disrespectful language and is unlikely to make readers leave the discussion.",
    };
    let extra = [
        "It is a neutral statement about the topic.",
        "It expresses an opinion without attacking anyone.",
        "It may be critical, but it remains civil.",
    ];
    format!("{main} {}", extra[(pick * 3.0) as usize % 3])
}

fn graded_text(concept: Concept, p: f64) -> String {
    let name = concept.name();
    if p <= 0.2 {
        format!("The comment does not contain any explicit derogatory or obscene language and is not {name}.")
    } else if p < 0.8 {
        format!(
            "The comment could be perceived as {name} by some readers, but it does not contain any explicit insult. \
             Overall, there is some potential for it to be seen as such."
        )
    } else {
        format!("The comment contains disrespectful language and does express a {name} attitude towards others.")
    }
}

fn respond(req: &AnnotationRequest, votes: &HashMap<String, [usize; 3]>) -> Result<String, GatewayError> {
    let r = &req.rendered;
    let id = r.comment_id.as_str();
    let yes = votes[id][r.concept.index()] as f64 / 5.0;
    let prompt = r.prompt_id.as_str();
    let concept = r.concept.name();

    // Keys deliberately absent from the cassette.
    let missing = matches!(
        (r.prompt_id, r.concept, id),
        (PromptId::P1, Concept::Toxic, "demo-022")
            | (PromptId::P3, Concept::Offensive, "demo-045")
            | (PromptId::P5, Concept::Hateful, "demo-010")
    );
    if missing {
        return Err(GatewayError::HttpStatus { code: 400, body: "request rejected".into() });
    }

    let bias = match r.concept {
        Concept::Hateful => -0.05,
        Concept::Offensive => 0.0,
        Concept::Toxic => 0.15,
    };
    let mut jitter = (unit_hash(&[id, concept, prompt]) - 0.5) * 0.3;
    if req.params.temperature > 0.0 {
        let it = req.iteration.to_string();
        jitter += (unit_hash(&[id, concept, prompt, &it, "t"]) - 0.5) * 0.3;
    }
    let p = ((yes + bias + jitter).clamp(0.0, 1.0) * 10.0).round() / 10.0;
    let pick = unit_hash(&[id, concept, "pick"]);
    let decided = p >= 0.5;

    let text = match r.prompt_id {
        PromptId::P1 if (p - 0.5).abs() < 0.15 => format!(
            "It depends on the context. Some readers may find the comment {concept}, while others may see it as \
             ordinary criticism."
        ),
        PromptId::P1 => {
            let answer = if decided { "a. Yes" } else { "b. No" };
            if pick < 0.5 { answer.to_string() } else { format!("{answer}\n\nThe comment {} {concept}.", if decided { "is" } else { "is not" }) }
        }
        PromptId::P2 if matches!((r.concept, id), (Concept::Hateful, "demo-037") | (Concept::Toxic, "demo-013")) => {
            "1. No\n2. Yes".to_string()
        }
        PromptId::P2 => if decided { "Yes." } else { "No." }.to_string(),
        PromptId::P3 if (r.concept, id) == (Concept::Toxic, "demo-058") => {
            "I am unable to assign a score to this comment.".to_string()
        }
        PromptId::P3 if p >= 1.0 && pick < 0.5 => "0.95".to_string(),
        PromptId::P3 if p <= 0.0 && pick < 0.5 => "0.05".to_string(),
        PromptId::P3 => format!("{p:.1}"),
        PromptId::P4 if id == "demo-026" => format!(
            "1. No. The first sentence does not contain {concept} language.\n2. Yes. The second part can be seen as {concept}."
        ),
        PromptId::P4 if decided => format!("Yes. {}", yes_text(r.concept, pick)),
        PromptId::P4 => format!("No. {}", no_text(r.concept, pick)),
        PromptId::P5 => format!("{p:.1}\n{}", graded_text(r.concept, p)),
    };
    Ok(text)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| manifest.join("target/demo_cassette.jsonl"));
    let corpus_path = manifest.join("data/demo_corpus.jsonl");
    let corpus = load_corpus(&corpus_path)?;
    let votes: HashMap<String, [usize; 3]> = corpus
        .records()
        .iter()
        .map(|r| (r.id().to_string(), Concept::ALL.map(|c| r.votes.get(c).iter().filter(|&&v| v).count())))
        .collect();

    if out.exists() {
        std::fs::remove_file(&out)?;
    }
    let backend = RecordingBackend::new(ScriptedBackend::new(move |req| respond(req, &votes)), CassetteWriter::open(&out)?);
    for experiment in [Experiment::E1, Experiment::E3, Experiment::E4] {
        let mut cfg = ExperimentConfig::new(experiment, &corpus_path).with_cassette(&out);
        cfg.concurrency = 1;
        let bundle = run_experiment_with(&cfg, &corpus, &backend)?;
        let failed: usize = bundle.runs.iter().map(|r| r.counts.failed).sum();
        println!("{experiment}: {} runs, {failed} failed items", bundle.runs.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}
