use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use glyphmorph_core::prompt::*;
use glyphmorph_core::scorer::*;

fn strings(a: [&str; 3]) -> [String; 3] {
    a.map(String::from)
}

#[test]
fn freedom_offline_matches_the_published_example() {
    let exp = PromptEngine::default().expand_concept("freedom", ExpansionMode::Offline).unwrap();
    assert_eq!(exp.objects, strings(["wings", "open book", "flying birds"]));
    assert_eq!(exp.font_attributes, strings(["playful", "fresh", "modern"]));
}

#[test]
fn egypt_offline_matches_the_published_example() {
    let exp = PromptEngine::default().expand_concept("Egypt", ExpansionMode::Offline).unwrap();
    assert_eq!(exp.objects, strings(["Pyramids", "Ankh", "Sphinx"]));
    assert_eq!(exp.concept, "Egypt");
}

#[test]
fn unknown_concept_falls_back() {
    let exp = PromptEngine::default().expand_concept("zzzz-unknown", ExpansionMode::Offline).unwrap();
    assert_eq!(exp.objects, strings(["zzzz-unknown", "zzzz-unknown", "zzzz-unknown"]));
    assert_eq!(exp.font_attributes, strings(["legible", "strong", "modern"]));
}

#[test]
fn empty_concept_is_an_error() {
    assert!(matches!(
        PromptEngine::default().expand_concept("   ", ExpansionMode::Offline),
        Err(PromptError::EmptyConcept)
    ));
}

#[test]
fn prompts_use_the_suffix_and_attribute_sentence() {
    let engine = PromptEngine::default();
    let exp = engine.expand_concept("freedom", ExpansionMode::Offline).unwrap();
    let set = engine.build_prompts(&exp);
    assert_eq!(
        set.morph_prompts[0],
        "a wings. minimal flat 2d vector icon. lineal color. on a white background. trending on artstation"
    );
    assert_eq!(set.morph_prompts[2], format!("a flying birds. {DEFAULT_SUFFIX}"));
    assert_eq!(set.font_prompt, "This is a playful, fresh, modern font");
}

#[test]
fn templates_carry_the_examples_and_the_concept() {
    let c = concept_prompt("ocean");
    assert!(c.contains("Wings or open book or flying birds."));
    assert!(c.contains("Open book or lightbulb or owl."));
    assert!(c.contains("Pyramids or Ankh or Sphinx."));
    assert!(c.ends_with("Response:"));
    assert_eq!(concept_from_prompt(RequestKind::Concepts, &c).as_deref(), Some("ocean"));

    let a = font_attribute_prompt("ocean");
    for attr in FONT_ATTRIBUTES {
        assert!(a.contains(&format!("\"{attr}\"")));
    }
    assert!(a.ends_with("Concept: ocean\nAnswer:"));
    assert_eq!(concept_from_prompt(RequestKind::FontAttrs, &a).as_deref(), Some("ocean"));
}

#[test]
fn reply_parsers() {
    assert_eq!(parse_objects("Waves, shell, or lighthouse.").unwrap(), strings(["Waves", "shell", "lighthouse"]));
    assert_eq!(
        parse_attributes("Answer: [\n \"Calm\",\n \"soft\",\n 'gentle'\n]").unwrap(),
        strings(["calm", "soft", "gentle"])
    );
    assert!(parse_attributes("[\"calm\", \"soft\"]").is_none());
    assert!(parse_attributes("[\"calm\", \"soft\", \"wet\"]").is_none());
}

#[test]
fn remote_mode_goes_through_the_scorer() {
    let server = LoopbackServer::spawn(std::sync::Arc::new(MockScorer::new())).unwrap();
    let client = HttpScorer::new(&server.url());
    let exp = PromptEngine::default().expand_concept("Knowledge", ExpansionMode::Remote(&client)).unwrap();
    assert_eq!(exp.objects, strings(["open book", "lightbulb", "owl"]));
    assert_eq!(exp.font_attributes, strings(["legible", "strong", "modern"]));
    assert_eq!(server.request_count(), 2);
}

/// Replies from a fixed script, recording the prompts it saw.
struct Scripted {
    replies: Vec<&'static str>,
    calls: AtomicUsize,
    seen: Mutex<Vec<String>>,
}

impl Scorer for Scripted {
    fn score(&self, req: &ScorerRequest) -> Result<ScorerResponse, ScorerError> {
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        self.seen.lock().unwrap().push(req.prompt.clone().unwrap_or_default());
        let reply = self.replies[i.min(self.replies.len() - 1)];
        Ok(ScorerResponse::strings(req.id.clone(), vec![reply.to_string()]))
    }
}

#[test]
fn unparseable_replies_are_reasked_then_fail_with_the_raw_text() {
    let scorer = Scripted {
        replies: vec!["I love this concept!"],
        calls: AtomicUsize::new(0),
        seen: Mutex::new(Vec::new()),
    };
    let err = PromptEngine::default()
        .expand_concept("ocean", ExpansionMode::Remote(&scorer))
        .unwrap_err();
    match err {
        PromptError::Unparseable { kind, attempts, raw } => {
            assert_eq!(kind, RequestKind::Concepts);
            assert_eq!(attempts, 1 + REASKS);
            assert_eq!(raw, "I love this concept!");
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(scorer.calls.load(Ordering::SeqCst), 3);
    let seen = scorer.seen.lock().unwrap();
    assert!(seen.iter().all(|p| *p == concept_prompt("ocean")));
}

#[test]
fn a_reask_can_recover() {
    let scorer = Scripted {
        replies: vec!["hmm", "Waves or shell or lighthouse.", "[\"calm\", \"soft\", \"gentle\"]"],
        calls: AtomicUsize::new(0),
        seen: Mutex::new(Vec::new()),
    };
    let exp = PromptEngine::default().expand_concept("ocean", ExpansionMode::Remote(&scorer)).unwrap();
    assert_eq!(exp.objects, strings(["Waves", "shell", "lighthouse"]));
    assert_eq!(exp.font_attributes, strings(["calm", "soft", "gentle"]));
}

#[test]
fn custom_tables_load_and_validate() {
    let table = OfflineTable::parse("# comment\nOcean = waves, shell, lighthouse | calm, soft, gentle\n").unwrap();
    assert_eq!(table.len(), 1);
    assert_eq!(table.expand("ocean").objects, strings(["waves", "shell", "lighthouse"]));
    assert!(matches!(
        OfflineTable::parse("ocean = a, b | calm, soft, gentle"),
        Err(PromptError::Table { line: 1, .. })
    ));
    assert!(matches!(
        OfflineTable::parse("\nocean = a, b, c | calm, soft, wet"),
        Err(PromptError::Table { line: 2, .. })
    ));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    std::fs::write(&path, "x = a, b, c |\n").unwrap();
    assert_eq!(OfflineTable::load(&path).unwrap().objects("X").unwrap()[2], "c");
}
