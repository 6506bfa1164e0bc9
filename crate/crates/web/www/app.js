// Built with `wasm-bindgen --target web --out-dir www/pkg`.
import init, { canonicalRule, evaluate, explore, describeStructure, Game } from "./pkg/odeen_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = { red: "#d33", blue: "#36c" };

function cellSvg(cell) {
  const fill = COLORS[cell.color];
  const shape = {
    square: `<rect x="5" y="5" width="18" height="18" fill="${fill}"/>`,
    up: `<polygon points="14,4 24,24 4,24" fill="${fill}"/>`,
    down: `<polygon points="4,4 24,4 14,24" fill="${fill}"/>`,
  }[cell.shape] ?? "";
  return `<svg class="cell" viewBox="0 0 28 28">${shape}</svg>`;
}

function structureHtml(text) {
  try {
    return `<span class="row">${JSON.parse(describeStructure(text)).map(cellSvg).join("")}</span>`;
  } catch (e) {
    return `<span class="error">${e.message ?? e}</span>`;
  }
}

function entryHtml(s, label) {
  const tag = label === undefined ? "" : label ? '<span class="yes">yes</span>' : '<span class="no">no</span>';
  return `<div class="entry">${structureHtml(s)}<code>${s}</code>${tag}</div>`;
}

function show(el, text, isError = false) {
  el.textContent = text;
  el.className = isError ? "out error" : "out";
}

function onEvaluate() {
  const rule = $("eval-rule").value.trim();
  const s = $("eval-structure").value;
  $("eval-view").innerHTML = structureHtml(s);
  try {
    const canonical = JSON.parse(canonicalRule(rule));
    show($("eval-out"), `${evaluate(rule, s) ? "satisfies" : "does not satisfy"} "${canonical.canonical}" (rule #${canonical.index}, ${canonical.category})`);
  } catch (e) {
    show($("eval-out"), e.message ?? String(e), true);
  }
}

function onExplore() {
  try {
    const r = JSON.parse(explore($("explore-rule").value.trim(), 6, Date.now() % 1e9));
    const pct = ((100 * r.weight) / r.total).toFixed(2);
    show($("explore-out"), `${r.weight} of ${r.total} structures (${pct}%) satisfy "${r.canonical}"`);
    $("explore-pos").innerHTML = r.positives.map((s) => entryHtml(s)).join("");
    $("explore-neg").innerHTML = r.negatives.map((s) => entryHtml(s)).join("");
  } catch (e) {
    show($("explore-out"), e.message ?? String(e), true);
    $("explore-pos").innerHTML = $("explore-neg").innerHTML = "";
  }
}

let game = null;

function renderGame() {
  const reveals = JSON.parse(game.reveals());
  $("play-board").innerHTML = reveals.map((e) => entryHtml(e.s, e.y === 1)).join("");
  show($("play-status"), `status: ${game.status()}, ${reveals.length} structures revealed`);
}

function newGame() {
  game = new Game($("play-easy").checked, Date.now() % 1e9);
  show($("play-out"), "");
  renderGame();
}

function guard(fn) {
  return () => {
    try {
      fn();
    } catch (e) {
      show($("play-out"), e.message ?? String(e), true);
    }
  };
}

await init();
$("eval-go").onclick = onEvaluate;
$("explore-go").onclick = onExplore;
$("play-new").onclick = newGame;
$("play-probe").onclick = guard(() => {
  const y = game.probe($("play-structure").value);
  show($("play-out"), `the master says ${y ? "yes" : "no"}`);
  renderGame();
});
$("play-guess").onclick = guard(() => {
  const r = JSON.parse(game.guess($("play-rule").value.trim()));
  if (r.verdict === "equivalent") show($("play-out"), `You win! The secret was "${r.secret}".`);
  else if (r.verdict === "malformed") show($("play-out"), r.error, true);
  else show($("play-out"), `Not equivalent: ${r.counterexample.s} is ${r.counterexample.y ? "yes" : "no"} under the secret.`);
  renderGame();
});
$("play-reveal").onclick = guard(() => {
  show($("play-out"), `The secret was "${game.reveal()}".`);
  renderGame();
});
onEvaluate();
newGame();
