/** Cluster gallery: one card per cluster with date badges and a thumbnail
 *  grid. Thumbnails load lazily via IntersectionObserver; images without a
 *  path (or that 404) render a labeled placeholder instead. */
import type { ClusterInfo } from "./api.js";

export class Gallery {
  private observer: IntersectionObserver | null = null;

  constructor(
    private readonly host: HTMLElement,
    private readonly imageUrl: (imageId: string) => string,
  ) {}

  render(clusters: ClusterInfo[]): void {
    this.observer?.disconnect();
    this.observer =
      typeof IntersectionObserver !== "undefined"
        ? new IntersectionObserver((entries) => {
            for (const entry of entries) {
              if (entry.isIntersecting) {
                this.hydrate(entry.target as HTMLElement);
                this.observer?.unobserve(entry.target);
              }
            }
          })
        : null;

    this.host.replaceChildren();
    for (const cluster of clusters) {
      this.host.appendChild(this.card(cluster));
    }
  }

  private card(cluster: ClusterInfo): HTMLElement {
    const card = document.createElement("section");
    card.className = "cluster-card";

    const header = document.createElement("header");
    const title = document.createElement("span");
    title.className = "cluster-title";
    title.textContent = `${cluster.cluster_id} (${cluster.size})`;
    header.appendChild(title);
    for (const date of cluster.dates) {
      const badge = document.createElement("span");
      badge.className = "date-badge";
      badge.textContent = date;
      header.appendChild(badge);
    }
    card.appendChild(header);

    const grid = document.createElement("div");
    grid.className = "thumb-grid";
    cluster.image_ids.forEach((imageId, idx) => {
      const cell = document.createElement("div");
      cell.className = "thumb";
      cell.dataset.imageId = imageId;
      if (cluster.paths[idx]) {
        cell.dataset.hasPath = "1";
      }
      cell.textContent = imageId;
      if (this.observer) {
        this.observer.observe(cell);
      } else {
        this.hydrate(cell);
      }
      grid.appendChild(cell);
    });
    card.appendChild(grid);
    return card;
  }

  private hydrate(cell: HTMLElement): void {
    const imageId = cell.dataset.imageId;
    if (!imageId || cell.dataset.hasPath !== "1") {
      cell.classList.add("placeholder");
      return;
    }
    const img = document.createElement("img");
    img.loading = "lazy";
    img.alt = imageId;
    img.onerror = () => {
      img.remove();
      cell.classList.add("placeholder");
      cell.textContent = imageId;
    };
    img.src = this.imageUrl(imageId);
    cell.textContent = "";
    cell.appendChild(img);
  }
}
