use async_trait::async_trait;
use sha2::{Digest, Sha256};

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse, TokenUsage};
use crate::segment::{split_sentences, Abbreviations};

/// Completion tokens the mock reports for every reply.
pub const MOCK_COMPLETION_TOKENS: u64 = 48;

/// Deterministic stand-in for a model.
///
/// The context is everything after the first `": "` of the prompt. For
/// explanation requests the reply is
/// `MOCK-EXPLAIN[<level>|sha=<8 hex of sha256(prompt)>]: <last sentence(s)>`;
/// for punctuation requests (tag `…/punctuation/…`) the context comes back
/// with its first letter capitalized and a full stop appended when it lacks a
/// terminal mark. Usage is `ceil(chars(prompt) / 4)` prompt tokens and
/// [`MOCK_COMPLETION_TOKENS`] completion tokens.
#[derive(Debug, Clone, Default)]
pub struct MockProvider;

impl MockProvider {
    pub fn new() -> Self {
        Self
    }

    pub fn reply(&self, request: &ProviderRequest) -> String {
        let context = extract_context(&request.prompt);
        let mut tag_parts = request.request_tag.rsplit('/');
        let last = tag_parts.next().unwrap_or("");
        if tag_parts.next() == Some("punctuation") {
            return punctuate(context);
        }
        let level: usize = match last {
            "2" => 2,
            _ => 1,
        };
        let digest = Sha256::digest(request.prompt.as_bytes());
        let sha: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
        format!("MOCK-EXPLAIN[{level}|sha={sha}]: {}", last_sentences(context, level))
    }
}

fn extract_context(prompt: &str) -> &str {
    prompt.split_once(": ").map_or(prompt, |(_, rest)| rest).trim()
}

fn last_sentences(context: &str, n: usize) -> &str {
    let spans = split_sentences(context, &Abbreviations::default());
    if spans.is_empty() {
        return context;
    }
    let first = spans.len().saturating_sub(n);
    let start_char = spans[first].0;
    let end_char = spans[spans.len() - 1].1;
    let byte = |c: usize| context.char_indices().nth(c).map_or(context.len(), |(b, _)| b);
    &context[byte(start_char)..byte(end_char)]
}

fn punctuate(context: &str) -> String {
    let mut chars = context.chars();
    let mut out: String = match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    if !out.ends_with(['.', '!', '?']) {
        out.push('.');
    }
    out
}

#[async_trait]
impl Provider for MockProvider {
    fn model_name(&self) -> &str {
        "mock"
    }

    fn max_in_flight(&self) -> usize {
        8
    }

    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        request.validate()?;
        let chars = request.prompt.chars().count() as u64;
        Ok(ProviderResponse {
            text: self.reply(request),
            usage: TokenUsage::new(chars.div_ceil(4), MOCK_COMPLETION_TOKENS),
            latency_ms: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete(prompt: &str, tag: &str) -> ProviderResponse {
        futures::executor::block_on(MockProvider.complete(&ProviderRequest::new(prompt, tag))).unwrap()
    }

    #[test]
    fn golden_level_one() {
        let prompt = "Explain this: First one. Second one.";
        let r = complete(prompt, "v1/0/1");
        assert_eq!(r.text, "MOCK-EXPLAIN[1|sha=ac7b08ac]: Second one.");
        assert_eq!(r.usage, TokenUsage::new(9, 48)); // 36 chars
    }

    #[test]
    fn level_two_takes_two_sentences() {
        let r = complete("X: A. B. C.", "v1/3/2");
        assert!(r.text.ends_with("]: B. C."), "{}", r.text);
        assert!(r.text.starts_with("MOCK-EXPLAIN[2|sha="));
    }

    #[test]
    fn punctuation_transform() {
        let r = complete("Fix: hello there", "v1/punctuation/0");
        assert_eq!(r.text, "Hello there.");
        let r = complete("Fix: already done?", "v1/punctuation/3");
        assert_eq!(r.text, "Already done?");
    }

    #[test]
    fn deterministic() {
        let a = complete("P: some text.", "v/1/1");
        let b = complete("P: some text.", "v/1/1");
        assert_eq!(a, b);
        assert_eq!(complete("P", "v/0/1").usage.prompt_tokens, 1);
    }

    #[test]
    fn empty_prompt_rejected() {
        let err = futures::executor::block_on(MockProvider.complete(&ProviderRequest::new("", "t")))
            .unwrap_err();
        assert!(matches!(err, ProviderError::InvalidRequest(_)));
    }
}
