use std::collections::VecDeque;

use parking_lot::Mutex;

use super::client::{CompletionClient, CompletionError, CompletionRequest};

/// Replies from a fixed script, or echoes the sentence once the script is
/// exhausted.
pub(crate) struct ScriptedClient {
    script: Mutex<VecDeque<Result<String, CompletionError>>>,
    log: Mutex<Vec<CompletionRequest>>,
}

impl ScriptedClient {
    pub fn new(script: Vec<Result<String, CompletionError>>) -> Self {
        ScriptedClient {
            script: Mutex::new(script.into()),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn replies<const N: usize>(replies: [&str; N]) -> Self {
        Self::new(replies.iter().map(|r| Ok(r.to_string())).collect())
    }

    pub fn echo() -> Self {
        Self::new(Vec::new())
    }

    pub fn requests(&self) -> Vec<CompletionRequest> {
        self.log.lock().clone()
    }
}

pub(crate) fn sentence_of(request: &CompletionRequest) -> String {
    let user = &request.messages.last().expect("user message").content;
    user.trim_start_matches("Original: ")
        .trim_end_matches("\nSimplified:")
        .to_string()
}

impl CompletionClient for ScriptedClient {
    fn complete(&self, request: &CompletionRequest) -> Result<String, CompletionError> {
        self.log.lock().push(request.clone());
        match self.script.lock().pop_front() {
            Some(reply) => reply,
            None => Ok(sentence_of(request)),
        }
    }
}
