//! Asks a chat-completion endpoint about a rendered frame.
//!
//! Set `PERSISTBENCH_URL` (for example `http://localhost:8000/v1`) and
//! optionally `PERSISTBENCH_MODEL` and `PERSISTBENCH_TOKEN_VAR` (the name of the
//! variable holding the bearer token). Without a URL the request body is
//! printed instead.

use persistbench::harness::{
    generate_scene, query_model, request_body, ContextTurn, ModelEndpoint, SceneSpec,
};

fn main() -> persistbench::Result<()> {
    let (frames, timeline) = generate_scene(&SceneSpec::static_object("car", "red"), 1, 0)?;
    let mut endpoint = ModelEndpoint::new(
        std::env::var("PERSISTBENCH_URL").unwrap_or_default(),
        std::env::var("PERSISTBENCH_MODEL").unwrap_or_else(|_| "vision-model".into()),
    );
    endpoint.auth_env = std::env::var("PERSISTBENCH_TOKEN_VAR").ok();
    let context = [ContextTurn {
        query: "Is there a car in the current frame?".into(),
        answer: "yes".into(),
    }];
    let query = "What color is the car?";
    println!("annotated: {}", timeline[0].objects[0].describe());

    if endpoint.base_url.is_empty() {
        let body = request_body(&endpoint, &frames[0], query, &context, Some(1), None)?;
        println!("{}", String::from_utf8_lossy(&body));
        return Ok(());
    }
    let answer = query_model(&endpoint, &frames[0], query, &context, Some(1))?;
    println!("model: {answer}");
    Ok(())
}
