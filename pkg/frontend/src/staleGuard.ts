/**
 * Request-sequence tokens: only the most recently issued token is current.
 * A response handler checks its token before touching the DOM, so answers
 * to superseded requests are discarded no matter the arrival order.
 */
export class LatestOnly {
  private seq = 0;

  issue(): number {
    return ++this.seq;
  }

  isCurrent(token: number): boolean {
    return token === this.seq;
  }
}
