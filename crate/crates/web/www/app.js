import init, { convertSig, renderPrompt, validateResource } from "./pkg/fhir_sculptor_web.js";

const $ = (id) => document.getElementById(id);

function status(el, valid, text) {
  el.textContent = text;
  el.className = "status " + (valid ? "ok" : "bad");
}

function convert() {
  const result = JSON.parse(convertSig($("sig").value));
  $("convert-out").textContent = JSON.stringify(result, null, 2);
  if (result.resource) {
    $("resource").value = JSON.stringify(result.resource, null, 2);
  }
  const valid = result.validation && result.validation.valid;
  status($("convert-status"), valid, result.resource ? (valid ? "valid resource" : "resource has errors") : "no resource");
}

function prompt() {
  try {
    $("prompt-out").textContent = renderPrompt($("kind").value, $("sig").value);
  } catch (e) {
    $("prompt-out").textContent = String(e);
  }
}

function validate() {
  const report = JSON.parse(validateResource($("resource").value));
  $("validate-out").textContent = report.issues.length
    ? report.issues.map((i) => `${i.severity} [${i.kind}] ${i.path}: ${i.message}`).join("\n")
    : "no issues";
  status($("validate-status"), report.valid, report.valid ? "valid" : "invalid");
}

await init();
$("convert").addEventListener("click", convert);
$("prompt").addEventListener("click", prompt);
$("validate").addEventListener("click", validate);
$("sig").addEventListener("keydown", (e) => { if (e.key === "Enter") convert(); });
convert();
