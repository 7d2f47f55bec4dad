/** Trailing-edge debouncer with cancellation of superseded calls.
 *
 * The wrapped async function receives an AbortSignal; when a newer call
 * fires (or the timer restarts) the previous in-flight request is aborted,
 * so at most one request is ever outstanding.
 */

export type DebouncedFetch<A extends unknown[]> = {
  (...args: A): void;
  cancel(): void;
};

export function debounceFetch<A extends unknown[]>(
  fn: (signal: AbortSignal, ...args: A) => Promise<void>,
  waitMs: number,
): DebouncedFetch<A> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let controller: AbortController | null = null;

  const call = (...args: A): void => {
    if (timer !== null) {
      clearTimeout(timer);
    }
    timer = setTimeout(() => {
      timer = null;
      controller?.abort();
      controller = new AbortController();
      const mine = controller;
      void fn(mine.signal, ...args).catch((err: unknown) => {
        // aborted requests are expected; real errors surface via fn itself
        if (!(err instanceof DOMException && err.name === "AbortError")) {
          throw err;
        }
      });
    }, waitMs);
  };
  call.cancel = () => {
    if (timer !== null) {
      clearTimeout(timer);
      timer = null;
    }
    controller?.abort();
    controller = null;
  };
  return call;
}
