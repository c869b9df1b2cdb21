/**
 * Metadata-aware completion for the question input.
 *
 * The backend owns ranking and membership; this module decides *when* to ask
 * (only while a word is being typed) and how a picked identifier is inserted.
 */

import { ApiClient, Suggestion } from "./api.js";

const TRAILING_WORD = /[A-Za-z_][A-Za-z0-9_]*$/;

/** The word under the cursor, or null when the input ends a word boundary. */
export function trailingWord(text: string): string | null {
  const match = TRAILING_WORD.exec(text);
  return match ? match[0] : null;
}

/**
 * Fetch suggestions for the current input; resolves to an empty list at word
 * boundaries so the dropdown hides.
 */
export async function suggestWhileTyping(
  client: ApiClient,
  datasourceId: string,
  text: string,
): Promise<Suggestion[]> {
  if (trailingWord(text) === null) {
    return [];
  }
  const response = await client.autocomplete(datasourceId, text);
  return response.suggestions;
}

/** Replace the trailing word with the chosen identifier, verbatim. */
export function applySuggestion(text: string, suggestion: Suggestion): string {
  const word = trailingWord(text);
  if (word === null) {
    return text + suggestion.completion;
  }
  return text.slice(0, text.length - word.length) + suggestion.completion;
}
