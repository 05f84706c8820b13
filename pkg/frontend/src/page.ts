/** Static page markup — the single source of truth for the UI skeleton.
 *
 * index.html and the tests mount the same markup, so the DOM the tests
 * exercise is exactly the DOM the browser gets.
 */

export const PAGE_HTML = `
<main class="storyloom">
  <h1>storyloom</h1>
  <div id="error-banner" class="banner" hidden></div>
  <div id="validation-line" class="validation" hidden></div>

  <section id="requirement-area">
    <label for="requirement-input">Requirement</label>
    <input id="requirement-input" type="text"
           placeholder="Please input your requirement here..." />
    <button id="requirement-submit" type="button">Submit</button>
  </section>

  <div id="state-line"></div>
  <div id="progress-line" hidden></div>

  <section id="scenario-area" hidden>
    <h2>Scenarios</h2>
    <div id="scenario-list"></div>
    <div id="new-scenario-area">
      <label for="new-scenario-input">Your new scenario</label>
      <input id="new-scenario-input" type="text" />
      <button id="new-scenario-add" type="button">Add</button>
    </div>
    <button id="generate-btn" type="button">Generate</button>
  </section>

  <section id="area-execution" hidden>
    <h2>Code Execution Link</h2>
    <a id="preview-link" target="_blank" rel="noopener">Open the prototype</a>
  </section>

  <section id="area-download" hidden>
    <h2>Code Download</h2>
    <a id="download-link">Download this version</a>
  </section>

  <section id="area-design" hidden>
    <h2>Design Modification</h2>
    <textarea id="design-input" rows="3"></textarea>
    <button id="design-submit" type="button">Request design changes</button>
  </section>

  <section id="area-function" hidden>
    <h2>Function Modification</h2>
    <textarea id="function-input" rows="3"></textarea>
    <button id="function-submit" type="button">Request function changes</button>
  </section>

  <section id="version-area" hidden>
    <label for="version-select">Version</label>
    <select id="version-select"></select>
    <button id="accept-btn" type="button">Accept</button>
  </section>

  <section id="log-area">
    <h2>Log</h2>
    <pre id="log-panel"></pre>
  </section>
</main>
`;

export function mountPage(root: HTMLElement): void {
  root.innerHTML = PAGE_HTML;
}
